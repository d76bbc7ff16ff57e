#include "gqn/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gqn/errors.hpp"

namespace gqn {

using nlohmann::json;

namespace {

json point(radio::Vec2 p) {
    return json::array({p.x, p.y});
}

radio::Vec2 point(const json& j) {
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("expected [x, y] point");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace

std::string to_json_text(const ScenarioFile& s) {
    json j;
    j["format"] = "gqn-scenario";
    j["version"] = 1;
    j["layout"] = s.layout;
    j["seed"] = s.seed;
    j["isd_m"] = s.deployment.intersite_distance_m;
    j["sites"] = json::array();
    for (auto p : s.deployment.sites) j["sites"].push_back(point(p));
    j["cells"] = json::array();
    for (const auto& c : s.deployment.cells) {
        j["cells"].push_back({{"site", point(c.site_position)},
                              {"azimuth_deg", c.azimuth_deg},
                              {"height_m", c.height_m},
                              {"tilt_deg", c.tilt_deg},
                              {"max_power_w", c.max_power_w}});
    }
    j["users"] = json::array();
    for (auto p : s.users) j["users"].push_back(point(p));
    return j.dump(1);
}

ScenarioFile scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("scenario file is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "gqn-scenario") throw InvalidArgument("not a gqn scenario file");
    if (j.value("version", 0) != 1) throw InvalidArgument("unsupported scenario file version");

    ScenarioFile s;
    s.layout = j.value("layout", "hex");
    s.seed = j.value("seed", std::uint64_t{0});
    s.deployment.intersite_distance_m = j.at("isd_m").get<double>();
    for (const auto& p : j.at("sites")) s.deployment.sites.push_back(point(p));
    for (const auto& c : j.at("cells")) {
        radio::AntennaConfig cell;
        cell.site_position = point(c.at("site"));
        cell.azimuth_deg = c.at("azimuth_deg").get<double>();
        cell.height_m = c.at("height_m").get<double>();
        cell.tilt_deg = radio::clamp_tilt(c.at("tilt_deg").get<double>());
        cell.max_power_w = radio::clamp_power(c.at("max_power_w").get<double>());
        s.deployment.cells.push_back(cell);
    }
    if (s.deployment.cells.size() != 3 * s.deployment.sites.size()) {
        throw InvalidArgument("scenario must have three cells per site");
    }
    for (const auto& p : j.at("users")) s.users.push_back(point(p));
    return s;
}

void save_scenario(const ScenarioFile& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write scenario file " + path.string());
    out << to_json_text(scenario) << '\n';
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json_text(buf.str());
}

} // namespace gqn
