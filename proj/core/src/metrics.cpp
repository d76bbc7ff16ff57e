#include "gqn/metrics.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "gqn/errors.hpp"

namespace gqn::metrics {

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{}", v);
}

std::string first_line(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

std::string format_row(const train::EpisodeRecord& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{}", r.step, r.episode, num(r.epsilon), num(r.loss),
                       num(r.reward_mean), num(r.global_sinr_db), num(r.mean_power_w), r.seed, r.algorithm);
}

train::EpisodeRecord parse_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw InvalidArgument("metrics row must have 9 fields: " + line);
    const auto d = [](const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); };
    train::EpisodeRecord r;
    try {
        r.step = std::stoll(f[0]);
        r.episode = std::stoll(f[1]);
        r.epsilon = d(f[2]);
        r.loss = d(f[3]);
        r.reward_mean = d(f[4]);
        r.global_sinr_db = d(f[5]);
        r.mean_power_w = d(f[6]);
        r.seed = std::stoull(f[7]);
    } catch (const std::logic_error&) {
        throw InvalidArgument("malformed metrics row: " + line);
    }
    r.algorithm = f[8];
    return r;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::string_view header, OpenMode mode) {
    const bool resume = mode == OpenMode::append && std::filesystem::exists(path) &&
                        std::filesystem::file_size(path) > 0;
    if (resume && first_line(path) != header) throw InvalidState("existing CSV has a different header: " + path.string());
    out_.open(path, resume ? std::ios::app : std::ios::trunc);
    if (!out_) throw InvalidState("cannot open " + path.string());
    if (!resume) {
        out_ << header << '\n';
        out_.flush();
    }
}

void CsvWriter::write_line(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw InvalidState("write failed");
}

void TraceWriter::write(const train::StepTrace& s) {
    csv_.write_line(fmt::format("{},{},{},{}", s.step, num(s.global_sinr_db), num(s.mean_power_w), num(s.reward)));
}

std::vector<train::EpisodeRecord> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw InvalidArgument("unexpected metrics header in " + path.string());
    std::vector<train::EpisodeRecord> rows;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(parse_row(line));
    }
    return rows;
}

} // namespace gqn::metrics
