#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "gqn/errors.hpp"
#include "gqn/metrics.hpp"

using namespace gqn;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "gqn_unit_metrics";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::filesystem::remove(p);
    return p;
}

std::vector<std::string> lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

train::EpisodeRecord record(std::int64_t ep) {
    train::EpisodeRecord r;
    r.step = 20 * (ep + 1);
    r.episode = ep;
    r.epsilon = 0.5;
    r.loss = ep == 0 ? std::nan("") : 0.125;
    r.reward_mean = -0.25;
    r.global_sinr_db = 6.5;
    r.mean_power_w = 40.0;
    r.seed = 3;
    r.algorithm = "gqn";
    return r;
}

} // namespace

TEST_CASE("header row is exact") {
    const auto p = scratch("header.csv");
    {
        metrics::MetricsWriter w(p);
    }
    const auto l = lines(p);
    REQUIRE(l.size() == 1);
    CHECK(l[0] == "step,episode,epsilon,loss,reward_mean,global_sinr_db,mean_power_w,seed,algorithm");
}

TEST_CASE("rows format, flush and parse back") {
    const auto p = scratch("rows.csv");
    metrics::MetricsWriter w(p);
    w.write(record(0));
    w.write(record(1));
    // Flushed per row: readable while the writer is still open.
    const auto l = lines(p);
    REQUIRE(l.size() == 3);
    CHECK(l[1] == "20,0,0.5,nan,-0.25,6.5,40,3,gqn");
    const auto rows = metrics::read_metrics(p);
    REQUIRE(rows.size() == 2);
    CHECK(std::isnan(rows[0].loss));
    CHECK(rows[1].loss == 0.125);
    CHECK(rows[1].step == 40);
    CHECK(rows[1].algorithm == "gqn");
}

TEST_CASE("round trip keeps doubles exactly") {
    auto r = record(5);
    r.global_sinr_db = 0.1 + 0.2;
    r.reward_mean = -1.0 / 3.0;
    const auto back = metrics::parse_row(metrics::format_row(r));
    CHECK(back.global_sinr_db == r.global_sinr_db);
    CHECK(back.reward_mean == r.reward_mean);
}

TEST_CASE("append resumes an existing file") {
    const auto p = scratch("resume.csv");
    {
        metrics::MetricsWriter w(p);
        w.write(record(0));
    }
    {
        metrics::MetricsWriter w(p, metrics::OpenMode::append);
        w.write(record(1));
    }
    const auto rows = metrics::read_metrics(p);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].episode == 1);
    CHECK(lines(p).size() == 3);

    const auto fresh = scratch("fresh.csv");
    {
        metrics::MetricsWriter w(fresh, metrics::OpenMode::append);
        w.write(record(0));
    }
    CHECK(lines(fresh).size() == 2);
}

TEST_CASE("append to a file with a different schema is refused") {
    const auto p = scratch("other.csv");
    {
        std::ofstream(p) << "a,b,c\n1,2,3\n";
    }
    CHECK_THROWS_AS(metrics::MetricsWriter(p, metrics::OpenMode::append), InvalidState);
}

TEST_CASE("trace rows") {
    const auto p = scratch("trace.csv");
    {
        metrics::TraceWriter w(p);
        w.write({1, 5.5, 40.0, -0.2});
    }
    const auto l = lines(p);
    REQUIRE(l.size() == 2);
    CHECK(l[0] == "step,mean_global_sinr_db,mean_power_w,reward");
    CHECK(l[1] == "1,5.5,40,-0.2");
}

TEST_CASE("malformed rows are rejected") {
    CHECK_THROWS((void)metrics::parse_row("1,2,3"));
}
