#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gqn/radio.hpp"

namespace gqn {

// A frozen topology: sites, sector settings and user positions. Stored as JSON
// with full double precision so a replay reproduces the exact link budget.
struct ScenarioFile {
    std::string layout; // "hex" or "random"
    std::uint64_t seed = 0;
    radio::Deployment deployment;
    std::vector<radio::Vec2> users;
};

std::string to_json_text(const ScenarioFile& scenario);
ScenarioFile scenario_from_json_text(const std::string& text);

void save_scenario(const ScenarioFile& scenario, const std::filesystem::path& path);
ScenarioFile load_scenario(const std::filesystem::path& path);

} // namespace gqn
