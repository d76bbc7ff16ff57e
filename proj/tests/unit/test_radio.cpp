#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gqn/errors.hpp"
#include "gqn/radio.hpp"

#include "../support/radio_oracle.hpp"

using namespace gqn;
using namespace gqn::radio;

TEST_CASE("path loss reference points") {
    CHECK(path_loss_db(1000.0) == doctest::Approx(128.1).epsilon(1e-12));
    CHECK(path_loss_db(100.0) == doctest::Approx(90.5).epsilon(1e-12));
    CHECK(path_loss_db(10.0) == path_loss_db(35.0));
    double prev = path_loss_db(1.0);
    for (double d = 2.0; d < 5000.0; d *= 1.3) {
        CHECK(path_loss_db(d) >= prev);
        prev = path_loss_db(d);
    }
}

TEST_CASE("transmit power and rsrp arithmetic") {
    const double p = tx_power_per_re_dbm(40.0, 100);
    CHECK(p == doctest::Approx(10.0 * std::log10(400.0)).epsilon(1e-12));
    CHECK(p == doctest::Approx(26.0206).epsilon(1e-5));
    CHECK(rsrp_dbm(p, 0.0, 128.1) == doctest::Approx(-102.0794).epsilon(1e-5));
    CHECK(tx_power_per_re_dbm(80.0, 100) - p == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("noise power over one resource element") {
    RadioConfig cfg;
    CHECK(noise_power_dbm(cfg) == doctest::Approx(-174.0 + 41.76091259055681 + 9.0).epsilon(1e-12));
}

TEST_CASE("antenna pattern hand values") {
    AntennaPattern p;
    CHECK(antenna_gain_db(p, 0.0, 7.0, 7.0) == doctest::Approx(15.0));
    CHECK(antenna_gain_db(p, 65.0, 7.0, 7.0) == doctest::Approx(3.0));
    CHECK(antenna_gain_db(p, 180.0, 7.0, 7.0) == doctest::Approx(-10.0));
    // Vertical side lobe clamp alone: 20 dB below peak.
    CHECK(antenna_gain_db(p, 0.0, 90.0, 0.0) == doctest::Approx(-5.0));
    // Combined attenuation capped at A_m.
    CHECK(antenna_gain_db(p, 120.0, 90.0, 0.0) == doctest::Approx(-10.0));
}

TEST_CASE("azimuth wraps into (-180, 180]") {
    AntennaConfig c;
    c.azimuth_deg = 240.0;
    CHECK(relative_azimuth_deg(c, {-1.0, 0.0}) == doctest::Approx(-60.0));
    c.azimuth_deg = 0.0;
    CHECK(relative_azimuth_deg(c, {-1.0, 0.0}) == doctest::Approx(180.0));
    CHECK(relative_azimuth_deg(c, {0.0, 1.0}) == doctest::Approx(90.0));
}

TEST_CASE("hexagonal deployments") {
    const auto one = generate_hexagonal_deployment(1, 500.0);
    REQUIRE(one.sites.size() == 1);
    REQUIRE(one.cells.size() == 3);
    CHECK(one.cells[0].azimuth_deg == 0.0);
    CHECK(one.cells[1].azimuth_deg == 120.0);
    CHECK(one.cells[2].azimuth_deg == 240.0);

    const auto d19 = generate_hexagonal_deployment(19, 1000.0);
    CHECK(d19.cells.size() == 57);
    for (std::size_t i = 0; i < d19.sites.size(); ++i) {
        double nearest = 1e18;
        for (std::size_t j = 0; j < d19.sites.size(); ++j) {
            if (i != j) nearest = std::min(nearest, distance(d19.sites[i], d19.sites[j]));
        }
        CHECK(nearest == doctest::Approx(1000.0).epsilon(1e-12));
    }
    CHECK(generate_hexagonal_deployment(37, 600.0).cells.size() == 111);
    CHECK(generate_hexagonal_deployment(7, 600.0).cells.size() == 21);
    CHECK_THROWS_AS(generate_hexagonal_deployment(5, 500.0), InvalidArgument);
    CHECK_THROWS_AS(generate_hexagonal_deployment(7, 0.0), InvalidArgument);
}

TEST_CASE("random deployments respect the spacing and are reproducible") {
    const auto one = generate_random_deployment(1, 300.0, 1e6, 42);
    CHECK(one.sites.size() == 1);
    const auto a = generate_random_deployment(19, 300.0, 1e8, 7);
    const auto b = generate_random_deployment(19, 300.0, 1e8, 7);
    CHECK(a == b);
    CHECK(a.cells.size() == 57);
    for (std::size_t i = 0; i < a.sites.size(); ++i) {
        for (std::size_t j = i + 1; j < a.sites.size(); ++j) CHECK(distance(a.sites[i], a.sites[j]) >= 300.0);
    }
    CHECK_THROWS_AS(generate_random_deployment(50, 1000.0, 1e6, 1), CapacityExceeded);
}

TEST_CASE("per-user SINR matches an independent implementation") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(-800.0, 800.0), tilt(0.0, 15.0), power(10.0, 60.0);
    std::uniform_int_distribution<int> n_cells_d(1, 5), n_users_d(1, 50), az(0, 2);
    const gqn::testing::RadioOracle oracle;
    RadioConfig cfg;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<AntennaConfig> cells(static_cast<std::size_t>(n_cells_d(rng)));
        for (auto& c : cells) {
            c.site_position = {pos(rng), pos(rng)};
            c.azimuth_deg = 120.0 * az(rng);
            c.tilt_deg = tilt(rng);
            c.max_power_w = power(rng);
        }
        Deployment d;
        d.cells = cells;
        std::vector<Vec2> users(static_cast<std::size_t>(n_users_d(rng)));
        for (auto& u : users) u = {pos(rng), pos(rng)};

        auto link = compute_link_budget(d, users, cfg);
        UserPopulation pop{users, {}};
        attach_users(pop, link);
        const auto sinr = all_user_sinr_db(link, pop, noise_power_dbm(cfg));
        for (std::size_t u = 0; u < users.size(); ++u) {
            const auto [serving, expect] = oracle.sinr(cells, users[u]);
            CHECK(pop.attachment[u] == serving);
            CHECK(std::abs(sinr[u] - expect) <= 1e-9 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("single cell SINR is signal over noise") {
    Deployment d = generate_hexagonal_deployment(1, 500.0);
    d.cells.resize(1);
    RadioConfig cfg;
    const std::vector<Vec2> users{{200.0, 10.0}};
    auto link = compute_link_budget(d, users, cfg);
    UserPopulation pop{users, {}};
    attach_users(pop, link);
    CHECK(user_sinr_db(0, link, pop, noise_power_dbm(cfg)) ==
          doctest::Approx(link.rsrp(0, 0) - noise_power_dbm(cfg)).epsilon(1e-12));
}

TEST_CASE("two identical cells give about 0 dB and ties go to the lower index") {
    Deployment d;
    AntennaConfig a;
    a.site_position = {0.0, 0.0};
    AntennaConfig b = a;
    d.cells = {a, b};
    RadioConfig cfg;
    const std::vector<Vec2> users{{300.0, 0.0}};
    auto link = compute_link_budget(d, users, cfg);
    UserPopulation pop{users, {}};
    attach_users(pop, link);
    CHECK(pop.attachment[0] == 0);
    CHECK(user_sinr_db(0, link, pop, -300.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("tilt refresh leaves path loss untouched and power scales rsrp linearly") {
    auto d = generate_hexagonal_deployment(7, 500.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(-900.0, 900.0);
    std::vector<Vec2> users(40);
    for (auto& u : users) u = {pos(rng), pos(rng)};
    RadioConfig cfg;
    auto link = compute_link_budget(d, users, cfg);
    const auto pl = link.path_loss;
    const auto before = link.rsrp;
    d.cells[4].tilt_deg = 9.0;
    d.cells[5].max_power_w = 80.0;
    const std::vector<std::size_t> changed{4, 5};
    refresh_link_budget(link, d, users, cfg, changed);
    CHECK((link.path_loss.array() == pl.array()).all());
    for (Eigen::Index u = 0; u < link.rsrp.cols(); ++u) {
        CHECK(link.rsrp(5, u) - before(5, u) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-9));
        CHECK(link.rsrp(0, u) == before(0, u));
    }
}

TEST_CASE("attachment optimality, serving power monotonicity and dB-mean decomposition") {
    auto d = generate_hexagonal_deployment(7, 700.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-1400.0, 1400.0), tilt(0.0, 15.0);
    for (auto& c : d.cells) c.tilt_deg = tilt(rng);
    std::vector<Vec2> users(300);
    for (auto& u : users) u = {pos(rng), pos(rng)};
    RadioConfig cfg;
    auto link = compute_link_budget(d, users, cfg);
    UserPopulation pop{users, {}};
    attach_users(pop, link);
    for (std::size_t u = 0; u < users.size(); ++u) {
        for (Eigen::Index c = 0; c < link.rsrp.rows(); ++c) {
            CHECK(link.rsrp(pop.attachment[u], static_cast<Eigen::Index>(u)) >= link.rsrp(c, static_cast<Eigen::Index>(u)));
        }
    }
    const double noise = noise_power_dbm(cfg);
    const auto sinr = all_user_sinr_db(link, pop, noise);
    const auto local = local_sinr_db(sinr, pop.attachment, d.cells.size(), -10.0);
    const auto counts = users_per_cell(pop.attachment, d.cells.size());
    double weighted = 0.0;
    for (std::size_t c = 0; c < d.cells.size(); ++c) weighted += counts[c] * (counts[c] > 0 ? local[c] : 0.0);
    CHECK(weighted == doctest::Approx(users.size() * global_sinr_db(sinr)).epsilon(1e-10));

    // Raise cell 3's power only; its users (attachment fixed) never lose SINR.
    auto d2 = d;
    d2.cells[3].max_power_w = 60.0;
    auto link2 = compute_link_budget(d2, users, cfg);
    const auto sinr2 = all_user_sinr_db(link2, pop, noise);
    for (std::size_t u = 0; u < users.size(); ++u) {
        if (pop.attachment[u] == 3) CHECK(sinr2[u] >= sinr[u] - 1e-12);
    }
}

TEST_CASE("aggregate SINR helpers") {
    const std::vector<double> s{10.0, 20.0, 30.0};
    CHECK(global_sinr_db(s) == doctest::Approx(20.0));
    const std::vector<int> att{0, 0, 2};
    const auto local = local_sinr_db(s, att, 3, -10.0);
    CHECK(local[0] == doctest::Approx(15.0));
    CHECK(local[1] == -10.0);
    CHECK(local[2] == doctest::Approx(30.0));
    CHECK_THROWS_AS(global_sinr_db(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("clamping of controllable parameters") {
    CHECK(clamp_tilt(-3.0) == 0.0);
    CHECK(clamp_tilt(16.0) == 15.0);
    CHECK(clamp_power(5.0) == 10.0);
    CHECK(clamp_power(65.0) == 60.0);
}
