#pragma once

// Downlink radio model: deployments, 3GPP-style sector antennas, log-distance
// path loss, RSRP, strongest-cell attachment and per-user SINR.
//
// Conventions: positions in meters on a plane, azimuth in degrees measured
// counter-clockwise from the +x axis, tilt in degrees below the horizon,
// power in watts at the API and dBm/mW internally.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gqn::radio {

inline constexpr double kMinTilt = 0.0;
inline constexpr double kMaxTilt = 15.0;
inline constexpr double kMinPower = 10.0;
inline constexpr double kMaxPower = 60.0;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

struct AntennaPattern {
    double max_gain_db = 15.0;
    double horizontal_beamwidth_deg = 65.0;
    double vertical_beamwidth_deg = 10.0;
    double front_to_back_db = 25.0;   // A_m
    double vertical_sidelobe_db = 20.0; // SLA_v
};

struct RadioConfig {
    AntennaPattern pattern;
    double antenna_height_m = 30.0;
    double ue_height_m = 1.5;
    int resource_blocks = 100;
    double noise_figure_db = 9.0;
    double resource_element_bw_hz = 15000.0;
    double min_distance_m = 35.0;
    double shadowing_sigma_db = 0.0;
};

struct AntennaConfig {
    Vec2 site_position;
    double azimuth_deg = 0.0;
    double height_m = 30.0;
    double tilt_deg = 0.0;
    double max_power_w = 40.0;

    friend bool operator==(const AntennaConfig&, const AntennaConfig&) = default;
};

// Clamp helpers for the controllable parameters.
double clamp_tilt(double tilt_deg);
double clamp_power(double power_w);

struct Deployment {
    std::vector<Vec2> sites;
    std::vector<AntennaConfig> cells; // cells[3*s + k] belongs to sites[s]
    double intersite_distance_m = 0.0;

    [[nodiscard]] std::size_t site_of(std::size_t cell) const { return cell / 3; }
    friend bool operator==(const Deployment&, const Deployment&) = default;
};

// Hexagonal lattice with 0..3 rings around the origin (1, 7, 19 or 37 sites).
Deployment generate_hexagonal_deployment(int n_sites, double isd_m, double antenna_height_m = 30.0);

// Sites uniform in a centered square of the given area, pairwise distance >= min_isd.
// Throws CapacityExceeded when rejection sampling gives up.
Deployment generate_random_deployment(int n_sites, double min_isd_m, double area_m2, std::uint64_t seed,
                                      double antenna_height_m = 30.0);

// Horizontal angle from boresight wrapped to (-180, 180].
double relative_azimuth_deg(const AntennaConfig& cell, Vec2 user);
// Downward elevation angle from the antenna to the user.
double elevation_deg(const AntennaConfig& cell, Vec2 user, double ue_height_m);

double antenna_gain_db(const AntennaConfig& cell, Vec2 user, const RadioConfig& config);
double antenna_gain_db(const AntennaPattern& pattern, double rel_azimuth_deg, double elevation_deg, double tilt_deg);

// 128.1 + 37.6 log10(d / 1 km), distance clamped below at min_distance_m.
double path_loss_db(double distance_m, double min_distance_m = 35.0);

// Power per reference-signal resource element: phi / N_RB, expressed in dBm.
double tx_power_per_re_dbm(double max_power_w, int resource_blocks);
double rsrp_dbm(double tx_power_dbm, double gain_db, double path_loss_db);

// Thermal noise over one resource element including the UE noise figure.
double noise_power_dbm(const RadioConfig& config);

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

using Matrix = Eigen::MatrixXd;

// Cell x user matrices. path_loss is fixed for a (deployment, users) pair;
// gain and rsrp follow the current tilt and power settings.
struct LinkBudget {
    Matrix path_loss;
    Matrix gain;
    Matrix rsrp;
};

struct UserPopulation {
    std::vector<Vec2> positions;
    std::vector<int> attachment;
};

// Builds all three matrices. shadowing_db, when non-empty, is added to the path
// loss and must be n_cells x n_users.
LinkBudget compute_link_budget(const Deployment& deployment, std::span<const Vec2> users,
                               const RadioConfig& config, const Matrix* shadowing_db = nullptr);

// Recomputes gain and rsrp for the given cells only; path_loss is left untouched.
void refresh_link_budget(LinkBudget& link, const Deployment& deployment, std::span<const Vec2> users,
                         const RadioConfig& config, std::span<const std::size_t> cells);
void refresh_link_budget(LinkBudget& link, const Deployment& deployment, std::span<const Vec2> users,
                         const RadioConfig& config);

// argmax over the rsrp column, ties to the lowest cell index.
void attach_users(UserPopulation& users, const LinkBudget& link);

double user_sinr_db(std::size_t user, const LinkBudget& link, const UserPopulation& users, double noise_dbm);
std::vector<double> all_user_sinr_db(const LinkBudget& link, const UserPopulation& users, double noise_dbm);

double global_sinr_db(std::span<const double> sinr_db);

// Mean dB SINR of each cell's attached users; cells without users get empty_value.
std::vector<double> local_sinr_db(std::span<const double> sinr_db, std::span<const int> attachment,
                                  std::size_t n_cells, double empty_value);
std::vector<int> users_per_cell(std::span<const int> attachment, std::size_t n_cells);

} // namespace gqn::radio
