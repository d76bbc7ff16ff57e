#include "gqn/radio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "gqn/errors.hpp"
#include "gqn/rng.hpp"

namespace gqn::radio {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr std::array<double, 3> kSectorAzimuths{0.0, 120.0, 240.0};

void add_sectors(Deployment& d, Vec2 site, double height) {
    for (double az : kSectorAzimuths) {
        d.cells.push_back(AntennaConfig{site, az, height, 0.0, 40.0});
    }
}

int hex_ring(int q, int r) {
    return std::max({std::abs(q), std::abs(r), std::abs(q + r)});
}

} // namespace

double distance(Vec2 a, Vec2 b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double clamp_tilt(double tilt_deg) {
    return std::clamp(tilt_deg, kMinTilt, kMaxTilt);
}

double clamp_power(double power_w) {
    return std::clamp(power_w, kMinPower, kMaxPower);
}

Deployment generate_hexagonal_deployment(int n_sites, double isd_m, double antenna_height_m) {
    int rings = -1;
    switch (n_sites) {
    case 1: rings = 0; break;
    case 7: rings = 1; break;
    case 19: rings = 2; break;
    case 37: rings = 3; break;
    default: throw InvalidArgument("hexagonal deployment supports 1, 7, 19 or 37 sites");
    }
    if (!(isd_m > 0.0)) throw InvalidArgument("intersite distance must be positive");

    struct Slot {
        int ring;
        double angle;
        Vec2 pos;
    };
    std::vector<Slot> slots;
    const double h = std::sqrt(3.0) / 2.0;
    for (int q = -rings; q <= rings; ++q) {
        for (int r = -rings; r <= rings; ++r) {
            const int ring = hex_ring(q, r);
            if (ring > rings) continue;
            const Vec2 p{isd_m * (q + 0.5 * r), isd_m * h * r};
            double angle = ring == 0 ? 0.0 : std::atan2(p.y, p.x) * kDegPerRad;
            if (angle < 0.0) angle += 360.0;
            // Snap away float noise so the ordering is platform independent.
            angle = std::round(angle * 1e6) / 1e6;
            slots.push_back({ring, angle, p});
        }
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return a.ring != b.ring ? a.ring < b.ring : a.angle < b.angle;
    });

    Deployment d;
    d.intersite_distance_m = isd_m;
    for (const auto& s : slots) {
        d.sites.push_back(s.pos);
        add_sectors(d, s.pos, antenna_height_m);
    }
    return d;
}

Deployment generate_random_deployment(int n_sites, double min_isd_m, double area_m2, std::uint64_t seed,
                                      double antenna_height_m) {
    if (n_sites < 1) throw InvalidArgument("need at least one site");
    if (!(area_m2 > 0.0) || min_isd_m < 0.0) throw InvalidArgument("area must be positive and min_isd non-negative");

    constexpr int kAttemptsPerSite = 2000;
    constexpr int kRestarts = 50;
    const double half = 0.5 * std::sqrt(area_m2);

    Rng rng(seed);
    for (int restart = 0; restart < kRestarts; ++restart) {
        std::vector<Vec2> sites;
        bool stuck = false;
        while (static_cast<int>(sites.size()) < n_sites && !stuck) {
            bool placed = false;
            for (int attempt = 0; attempt < kAttemptsPerSite; ++attempt) {
                const Vec2 cand{uniform(rng, -half, half), uniform(rng, -half, half)};
                const bool ok = std::all_of(sites.begin(), sites.end(),
                                            [&](Vec2 s) { return distance(s, cand) >= min_isd_m; });
                if (ok) {
                    sites.push_back(cand);
                    placed = true;
                    break;
                }
            }
            stuck = !placed;
        }
        if (stuck) continue;

        Deployment d;
        d.intersite_distance_m = min_isd_m;
        d.sites = std::move(sites);
        for (Vec2 s : d.sites) add_sectors(d, s, antenna_height_m);
        return d;
    }
    throw CapacityExceeded("could not place sites with the requested minimum distance");
}

double relative_azimuth_deg(const AntennaConfig& cell, Vec2 user) {
    const double bearing = std::atan2(user.y - cell.site_position.y, user.x - cell.site_position.x) * kDegPerRad;
    double rel = std::fmod(bearing - cell.azimuth_deg, 360.0);
    if (rel <= -180.0) rel += 360.0;
    if (rel > 180.0) rel -= 360.0;
    return rel;
}

double elevation_deg(const AntennaConfig& cell, Vec2 user, double ue_height_m) {
    const double d = distance(cell.site_position, user);
    return std::atan2(cell.height_m - ue_height_m, d) * kDegPerRad;
}

double antenna_gain_db(const AntennaPattern& p, double rel_azimuth_deg, double elev_deg, double tilt_deg) {
    const double ph = rel_azimuth_deg / p.horizontal_beamwidth_deg;
    const double th = (elev_deg - tilt_deg) / p.vertical_beamwidth_deg;
    const double a_h = -std::min(12.0 * ph * ph, p.front_to_back_db);
    const double a_v = -std::min(12.0 * th * th, p.vertical_sidelobe_db);
    return p.max_gain_db - std::min(-(a_h + a_v), p.front_to_back_db);
}

double antenna_gain_db(const AntennaConfig& cell, Vec2 user, const RadioConfig& config) {
    return antenna_gain_db(config.pattern, relative_azimuth_deg(cell, user), elevation_deg(cell, user, config.ue_height_m),
                           cell.tilt_deg);
}

double path_loss_db(double distance_m, double min_distance_m) {
    const double d = std::max(distance_m, min_distance_m);
    return 128.1 + 37.6 * std::log10(d / 1000.0);
}

double tx_power_per_re_dbm(double max_power_w, int resource_blocks) {
    return mw_to_dbm(max_power_w * 1000.0 / resource_blocks);
}

double rsrp_dbm(double tx_power_dbm, double gain_db, double path_loss_db) {
    return tx_power_dbm + gain_db - path_loss_db;
}

double noise_power_dbm(const RadioConfig& config) {
    return -174.0 + 10.0 * std::log10(config.resource_element_bw_hz) + config.noise_figure_db;
}

LinkBudget compute_link_budget(const Deployment& deployment, std::span<const Vec2> users, const RadioConfig& config,
                               const Matrix* shadowing_db) {
    const auto n_cells = static_cast<Eigen::Index>(deployment.cells.size());
    const auto n_users = static_cast<Eigen::Index>(users.size());
    if (shadowing_db && (shadowing_db->rows() != n_cells || shadowing_db->cols() != n_users)) {
        throw InvalidArgument("shadowing matrix must be cells x users");
    }

    LinkBudget link;
    link.path_loss.resize(n_cells, n_users);
    for (Eigen::Index c = 0; c < n_cells; ++c) {
        const Vec2 site = deployment.cells[static_cast<std::size_t>(c)].site_position;
        for (Eigen::Index u = 0; u < n_users; ++u) {
            link.path_loss(c, u) = path_loss_db(distance(site, users[static_cast<std::size_t>(u)]), config.min_distance_m);
        }
    }
    if (shadowing_db) link.path_loss += *shadowing_db;

    link.gain.resize(n_cells, n_users);
    link.rsrp.resize(n_cells, n_users);
    refresh_link_budget(link, deployment, users, config);
    return link;
}

void refresh_link_budget(LinkBudget& link, const Deployment& deployment, std::span<const Vec2> users,
                         const RadioConfig& config, std::span<const std::size_t> cells) {
    const auto n_users = static_cast<Eigen::Index>(users.size());
    for (std::size_t c : cells) {
        const auto& cell = deployment.cells[c];
        const double p_dbm = tx_power_per_re_dbm(cell.max_power_w, config.resource_blocks);
        const auto row = static_cast<Eigen::Index>(c);
        for (Eigen::Index u = 0; u < n_users; ++u) {
            const double g = antenna_gain_db(cell, users[static_cast<std::size_t>(u)], config);
            link.gain(row, u) = g;
            link.rsrp(row, u) = rsrp_dbm(p_dbm, g, link.path_loss(row, u));
        }
    }
}

void refresh_link_budget(LinkBudget& link, const Deployment& deployment, std::span<const Vec2> users,
                         const RadioConfig& config) {
    std::vector<std::size_t> all(deployment.cells.size());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
    refresh_link_budget(link, deployment, users, config, all);
}

void attach_users(UserPopulation& users, const LinkBudget& link) {
    const auto n_users = link.rsrp.cols();
    users.attachment.assign(static_cast<std::size_t>(n_users), 0);
    for (Eigen::Index u = 0; u < n_users; ++u) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < link.rsrp.rows(); ++c) {
            if (link.rsrp(c, u) > link.rsrp(best, u)) best = c;
        }
        users.attachment[static_cast<std::size_t>(u)] = static_cast<int>(best);
    }
}

double user_sinr_db(std::size_t user, const LinkBudget& link, const UserPopulation& users, double noise_dbm) {
    const auto u = static_cast<Eigen::Index>(user);
    const auto serving = static_cast<Eigen::Index>(users.attachment.at(user));
    double interference = dbm_to_mw(noise_dbm);
    for (Eigen::Index c = 0; c < link.rsrp.rows(); ++c) {
        if (c != serving) interference += dbm_to_mw(link.rsrp(c, u));
    }
    return mw_to_dbm(dbm_to_mw(link.rsrp(serving, u)) / interference);
}

std::vector<double> all_user_sinr_db(const LinkBudget& link, const UserPopulation& users, double noise_dbm) {
    std::vector<double> out(users.attachment.size());
    for (std::size_t u = 0; u < out.size(); ++u) out[u] = user_sinr_db(u, link, users, noise_dbm);
    return out;
}

double global_sinr_db(std::span<const double> sinr_db) {
    if (sinr_db.empty()) throw InvalidArgument("global SINR of an empty population");
    double sum = 0.0;
    for (double s : sinr_db) sum += s;
    return sum / static_cast<double>(sinr_db.size());
}

std::vector<int> users_per_cell(std::span<const int> attachment, std::size_t n_cells) {
    std::vector<int> counts(n_cells, 0);
    for (int c : attachment) ++counts.at(static_cast<std::size_t>(c));
    return counts;
}

std::vector<double> local_sinr_db(std::span<const double> sinr_db, std::span<const int> attachment,
                                  std::size_t n_cells, double empty_value) {
    if (sinr_db.size() != attachment.size()) throw InvalidArgument("SINR and attachment sizes differ");
    std::vector<double> sums(n_cells, 0.0);
    std::vector<int> counts(n_cells, 0);
    for (std::size_t u = 0; u < sinr_db.size(); ++u) {
        const auto c = static_cast<std::size_t>(attachment[u]);
        sums.at(c) += sinr_db[u];
        ++counts[c];
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        sums[c] = counts[c] > 0 ? sums[c] / counts[c] : empty_value;
    }
    return sums;
}

} // namespace gqn::radio
