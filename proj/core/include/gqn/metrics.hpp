#pragma once

// Per-episode metrics CSV. Rows are flushed as soon as they are written so a
// crashed run leaves a valid prefix that a resumed run can append to.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gqn/trainer.hpp"

namespace gqn::metrics {

inline constexpr std::string_view kHeader =
    "step,episode,epsilon,loss,reward_mean,global_sinr_db,mean_power_w,seed,algorithm";
inline constexpr std::string_view kTraceHeader = "step,mean_global_sinr_db,mean_power_w,reward";

enum class OpenMode { truncate, append };

std::string format_row(const train::EpisodeRecord& r);
train::EpisodeRecord parse_row(const std::string& line);

class CsvWriter {
public:
    // Append mode keeps existing rows and checks the header instead of rewriting it.
    CsvWriter(const std::filesystem::path& path, std::string_view header, OpenMode mode);
    void write_line(const std::string& line);

private:
    std::ofstream out_;
};

class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path, OpenMode mode = OpenMode::truncate)
        : csv_(path, kHeader, mode) {}
    void write(const train::EpisodeRecord& r) { csv_.write_line(format_row(r)); }

private:
    CsvWriter csv_;
};

class TraceWriter {
public:
    explicit TraceWriter(const std::filesystem::path& path, OpenMode mode = OpenMode::truncate)
        : csv_(path, kTraceHeader, mode) {}
    void write(const train::StepTrace& s);

private:
    CsvWriter csv_;
};

std::vector<train::EpisodeRecord> read_metrics(const std::filesystem::path& path);

} // namespace gqn::metrics
