#include "gqn/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "gqn/errors.hpp"
#include "gqn/rng.hpp"

namespace gqn::env {

namespace {

constexpr double kTiltStep = 1.0;
constexpr double kPowerStep = 5.0;

double affine(double v, double lo, double hi) {
    return std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

std::string to_string(Layout v) { return v == Layout::hex ? "hex" : "random"; }
std::string to_string(Scenario v) { return v == Scenario::tilt ? "tilt" : "joint"; }
std::string to_string(RewardScope v) { return v == RewardScope::global ? "global" : "local"; }

Layout parse_layout(const std::string& s) {
    if (s == "hex") return Layout::hex;
    if (s == "random") return Layout::random;
    throw InvalidArgument("layout must be hex or random, got '" + s + "'");
}

Scenario parse_scenario(const std::string& s) {
    if (s == "tilt") return Scenario::tilt;
    if (s == "joint") return Scenario::joint;
    throw InvalidArgument("scenario must be tilt or joint, got '" + s + "'");
}

RewardScope parse_reward_scope(const std::string& s) {
    if (s == "global") return RewardScope::global;
    if (s == "local") return RewardScope::local;
    throw InvalidArgument("reward scope must be global or local, got '" + s + "'");
}

Normalizer Normalizer::from(const ScenarioConfig& cfg) {
    return {cfg.sinr_floor_db, cfg.sinr_ceil_db, cfg.map_half_extent_m};
}

double Normalizer::sinr(double db) const { return affine(db, sinr_floor_db, sinr_ceil_db); }
double Normalizer::tilt(double deg) const { return affine(deg, radio::kMinTilt, radio::kMaxTilt); }
double Normalizer::power(double watts) const { return affine(watts, radio::kMinPower, radio::kMaxPower); }
double Normalizer::position(double meters) const {
    return std::clamp(meters / map_half_extent_m, -1.0, 1.0);
}

// --- graph -----------------------------------------------------------------

NetworkGraph NetworkGraph::from_edges(std::size_t n, std::span<const std::pair<int, int>> edges) {
    NetworkGraph g(n);
    for (auto [i, j] : edges) g.add_edge(i, j);
    return g;
}

void NetworkGraph::add_edge(int i, int j) {
    const auto n = static_cast<int>(size());
    if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidArgument("edge endpoint out of range");
    if (i == j) throw InvalidArgument("self loops are not allowed");
    auto insert = [](std::vector<int>& v, int x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it == v.end() || *it != x) v.insert(it, x);
    };
    insert(neighbors_[static_cast<std::size_t>(i)], j);
    insert(neighbors_[static_cast<std::size_t>(j)], i);
}

bool NetworkGraph::adjacent(int i, int j) const {
    const auto& v = neighbors_.at(static_cast<std::size_t>(i));
    return std::binary_search(v.begin(), v.end(), j);
}

std::size_t NetworkGraph::edge_count() const {
    std::size_t deg = 0;
    for (const auto& v : neighbors_) deg += v.size();
    return deg / 2;
}

Eigen::MatrixXd NetworkGraph::adjacency_matrix() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < size(); ++i) {
        for (int j : neighbors_[i]) a(static_cast<Eigen::Index>(i), j) = 1.0;
    }
    return a;
}

std::vector<int> NetworkGraph::neighbors_by_coupling(std::size_t i) const {
    std::vector<int> out = neighbors_.at(i);
    if (coupling.size() == 0) return out;
    const auto row = static_cast<Eigen::Index>(i);
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) { return coupling(row, a) > coupling(row, b); });
    return out;
}

Eigen::MatrixXd interference_coupling(const radio::LinkBudget& link, std::span<const int> attachment) {
    const auto n_cells = link.rsrp.rows();
    const auto n_users = link.rsrp.cols();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_cells, n_cells);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(n_cells);
    for (Eigen::Index u = 0; u < n_users; ++u) {
        const auto i = static_cast<Eigen::Index>(attachment[static_cast<std::size_t>(u)]);
        sum.row(i) += (link.rsrp.col(u).array() - link.rsrp(i, u)).matrix().transpose();
        count(i) += 1.0;
    }
    for (Eigen::Index i = 0; i < n_cells; ++i) {
        if (count(i) > 0.0) {
            sum.row(i) /= count(i);
        } else {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n_cells);
            for (Eigen::Index u = 0; u < n_users; ++u) {
                acc += (link.rsrp.col(u).array() - link.rsrp(i, u)).matrix().transpose();
            }
            sum.row(i) = n_users > 0 ? (acc / static_cast<double>(n_users)).eval() : acc;
        }
    }
    return sum;
}

NetworkGraph build_neighbor_graph(const radio::Deployment& deployment, const radio::LinkBudget& link,
                                  std::span<const int> attachment, int max_neighbors, double max_distance_m) {
    const std::size_t n = deployment.cells.size();
    NetworkGraph g(n);
    g.coupling = interference_coupling(link, attachment);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<int> cand;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = radio::distance(deployment.cells[i].site_position, deployment.cells[j].site_position);
            if (d <= max_distance_m) cand.push_back(static_cast<int>(j));
        }
        const auto row = static_cast<Eigen::Index>(i);
        std::stable_sort(cand.begin(), cand.end(),
                         [&](int a, int b) { return g.coupling(row, a) > g.coupling(row, b); });
        const auto keep = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(std::max(0, max_neighbors)));
        for (std::size_t k = 0; k < keep; ++k) g.add_edge(static_cast<int>(i), cand[k]);
    }
    return g;
}

SplitResult split_agents_per_parameter(const JointState& state, const NetworkGraph& graph, Scenario scenario) {
    if (scenario != Scenario::joint) throw InvalidState("per-parameter agents only exist in the joint scenario");
    const auto n = static_cast<Eigen::Index>(graph.size());
    if (state.features.rows() != n) throw InvalidArgument("state and graph node counts differ");

    const auto dim = state.features.cols();
    SplitResult out;
    out.state.features = Eigen::MatrixXd::Zero(2 * n, dim + kSplitTagFeatures);
    out.graph = NetworkGraph(static_cast<std::size_t>(2 * n));
    for (Eigen::Index c = 0; c < n; ++c) {
        for (int k = 0; k < 2; ++k) {
            out.state.features.row(2 * c + k).head(dim) = state.features.row(c);
            out.state.features(2 * c + k, dim + k) = 1.0;
        }
        const int t = static_cast<int>(2 * c);
        out.graph.add_edge(t, t + 1);
        for (int j : graph.neighbors(static_cast<std::size_t>(c))) {
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) out.graph.add_edge(t + a, 2 * j + b);
            }
        }
    }
    return out;
}

// --- observations ----------------------------------------------------------

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Eigen::MatrixXd cell_observations(const radio::Deployment& deployment, std::span<const double> user_sinr_db,
                                  std::span<const int> attachment, const Normalizer& norm) {
    const std::size_t n = deployment.cells.size();
    std::vector<std::vector<double>> per_cell(n);
    for (std::size_t u = 0; u < attachment.size(); ++u) {
        per_cell[static_cast<std::size_t>(attachment[u])].push_back(user_sinr_db[u]);
    }

    Eigen::MatrixXd obs(static_cast<Eigen::Index>(n), kCellFeatures);
    for (std::size_t c = 0; c < n; ++c) {
        const auto& cell = deployment.cells[c];
        const auto r = static_cast<Eigen::Index>(c);
        const double az = cell.azimuth_deg * std::numbers::pi / 180.0;
        obs(r, 0) = norm.position(cell.site_position.x);
        obs(r, 1) = norm.position(cell.site_position.y);
        obs(r, 2) = std::cos(az);
        obs(r, 3) = std::sin(az);
        const auto& s = per_cell[c];
        obs(r, 4) = s.empty() ? -1.0 : norm.sinr(percentile(s, 10.0));
        obs(r, 5) = s.empty() ? -1.0 : norm.sinr(percentile(s, 50.0));
        obs(r, 6) = s.empty() ? -1.0 : norm.sinr(percentile(s, 90.0));
        obs(r, 7) = norm.tilt(cell.tilt_deg);
        obs(r, 8) = norm.power(cell.max_power_w);
    }
    return obs;
}

// --- rewards ---------------------------------------------------------------

double reward_global_tilt(double global_sinr_db, const Normalizer& norm) {
    return norm.sinr(global_sinr_db);
}

namespace {

template <typename CellTerm>
double own_plus_neighbor_mean(const NetworkGraph& graph, std::size_t cell, CellTerm term) {
    const auto& nb = graph.neighbors(cell);
    double r = term(cell);
    if (!nb.empty()) {
        double s = 0.0;
        for (int j : nb) s += term(static_cast<std::size_t>(j));
        r += s / static_cast<double>(nb.size());
    }
    return r;
}

} // namespace

double local_tilt_reward_db(std::span<const double> local_sinr_db, const NetworkGraph& graph, std::size_t cell) {
    return own_plus_neighbor_mean(graph, cell, [&](std::size_t c) { return local_sinr_db[c]; });
}

double reward_local_tilt(std::span<const double> local_sinr_db, const NetworkGraph& graph, std::size_t cell,
                         const Normalizer& norm) {
    return 0.5 * own_plus_neighbor_mean(graph, cell, [&](std::size_t c) { return norm.sinr(local_sinr_db[c]); });
}

double reward_global_joint(double global_sinr_db, std::span<const double> powers_w, double w, const Normalizer& norm) {
    return (1.0 - w) * norm.sinr(global_sinr_db) - w * norm.power(mean_of(powers_w));
}

double local_joint_reward_raw(std::span<const double> local_sinr_db, std::span<const double> powers_w,
                              const NetworkGraph& graph, std::size_t cell, double w) {
    return own_plus_neighbor_mean(graph, cell,
                                  [&](std::size_t c) { return (1.0 - w) * local_sinr_db[c] - w * powers_w[c]; });
}

double reward_local_joint(std::span<const double> local_sinr_db, std::span<const double> powers_w,
                          const NetworkGraph& graph, std::size_t cell, double w, const Normalizer& norm) {
    return 0.5 * own_plus_neighbor_mean(graph, cell, [&](std::size_t c) {
               return (1.0 - w) * norm.sinr(local_sinr_db[c]) - w * norm.power(powers_w[c]);
           });
}

// --- environment -----------------------------------------------------------

NetworkEnv::NetworkEnv(ScenarioConfig config) : config_(std::move(config)), norm_(Normalizer::from(config_)) {
    if (config_.n_sites < 1) throw InvalidArgument("n_sites must be at least 1");
    if (config_.n_users < 1) throw InvalidArgument("n_users must be at least 1");
    if (!(config_.isd_min_m > 0.0) || config_.isd_max_m < config_.isd_min_m) {
        throw InvalidArgument("isd range must satisfy 0 < min <= max");
    }
    if (config_.w < 0.0 || config_.w > 1.0) throw InvalidArgument("w must lie in [0, 1]");
    if (config_.episode_length < 1) throw InvalidArgument("episode length must be positive");
    if (config_.split_agents && config_.scenario != Scenario::joint) {
        throw InvalidArgument("split agents require the joint scenario");
    }
    if (config_.layout == Layout::hex) {
        // Validates n_sites early.
        (void)radio::generate_hexagonal_deployment(config_.n_sites, 1.0);
    }
    noise_dbm_ = radio::noise_power_dbm(config_.radio);
}

std::size_t NetworkEnv::n_agents() const {
    return config_.split_agents ? 2 * n_cells() : n_cells();
}

int NetworkEnv::actions_per_agent() const {
    return config_.scenario == Scenario::joint && !config_.split_agents ? 9 : 3;
}

int NetworkEnv::observation_dim() const {
    return kCellFeatures + (config_.split_agents ? kSplitTagFeatures : 0);
}

const JointState& NetworkEnv::reset(std::uint64_t episode_seed) {
    episode_seed_ = episode_seed;
    Rng rng(episode_seed);
    const double isd = uniform(rng, config_.isd_min_m, config_.isd_max_m);
    const double height = config_.radio.antenna_height_m;
    if (config_.layout == Layout::hex) {
        deployment_ = radio::generate_hexagonal_deployment(config_.n_sites, isd, height);
    } else {
        const double area = config_.n_sites * std::sqrt(3.0) / 2.0 * isd * isd;
        deployment_ = radio::generate_random_deployment(config_.n_sites, 0.5 * isd, area, rng(), height);
    }
    deployment_.intersite_distance_m = isd;

    double x0 = deployment_.sites.front().x, x1 = x0, y0 = deployment_.sites.front().y, y1 = y0;
    for (auto s : deployment_.sites) {
        x0 = std::min(x0, s.x), x1 = std::max(x1, s.x);
        y0 = std::min(y0, s.y), y1 = std::max(y1, s.y);
    }
    const double margin = 0.5 * isd;
    users_.positions.resize(static_cast<std::size_t>(config_.n_users));
    for (auto& p : users_.positions) {
        p.x = uniform(rng, x0 - margin, x1 + margin);
        p.y = uniform(rng, y0 - margin, y1 + margin);
    }

    for (auto& cell : deployment_.cells) {
        cell.tilt_deg = std::round(uniform(rng, radio::kMinTilt, radio::kMaxTilt));
        cell.max_power_w = config_.scenario == Scenario::tilt ? config_.fixed_power_w
                                                              : radio::kMinPower + kPowerStep * uniform_int(rng, 0, 10);
    }

    if (config_.radio.shadowing_sigma_db > 0.0) {
        std::normal_distribution<double> gauss(0.0, config_.radio.shadowing_sigma_db);
        const auto n_sites = static_cast<Eigen::Index>(deployment_.sites.size());
        Eigen::MatrixXd per_site(n_sites, config_.n_users);
        for (Eigen::Index s = 0; s < n_sites; ++s) {
            for (Eigen::Index u = 0; u < per_site.cols(); ++u) per_site(s, u) = gauss(rng);
        }
        Eigen::MatrixXd shadow(static_cast<Eigen::Index>(n_cells()), per_site.cols());
        for (Eigen::Index c = 0; c < shadow.rows(); ++c) shadow.row(c) = per_site.row(c / 3);
        link_ = radio::compute_link_budget(deployment_, users_.positions, config_.radio, &shadow);
    } else {
        link_ = radio::compute_link_budget(deployment_, users_.positions, config_.radio);
    }
    start_episode();
    return state_;
}

const JointState& NetworkEnv::reset(const ScenarioFile& scenario) {
    if (scenario.deployment.cells.empty() || scenario.users.empty()) {
        throw InvalidArgument("scenario needs at least one cell and one user");
    }
    episode_seed_ = scenario.seed;
    deployment_ = scenario.deployment;
    users_.positions = scenario.users;
    if (config_.scenario == Scenario::tilt) {
        for (auto& c : deployment_.cells) c.max_power_w = config_.fixed_power_w;
    }
    link_ = radio::compute_link_budget(deployment_, users_.positions, config_.radio);
    start_episode();
    return state_;
}

void NetworkEnv::start_episode() {
    radio::attach_users(users_, link_);
    user_sinr_ = radio::all_user_sinr_db(link_, users_, noise_dbm_);
    local_sinr_ = radio::local_sinr_db(user_sinr_, users_.attachment, n_cells(), config_.sinr_floor_db);
    global_sinr_ = radio::global_sinr_db(user_sinr_);

    const double d_max = config_.graph_distance_factor * deployment_.intersite_distance_m;
    cell_graph_ = build_neighbor_graph(deployment_, link_, users_.attachment, config_.graph_max_neighbors, d_max);
    steps_ = 0;
    started_ = true;
    rebuild_observations();
}

void NetworkEnv::recompute_radio(std::span<const std::size_t> changed_cells) {
    if (!changed_cells.empty()) {
        radio::refresh_link_budget(link_, deployment_, users_.positions, config_.radio, changed_cells);
    }
    radio::attach_users(users_, link_);
    user_sinr_ = radio::all_user_sinr_db(link_, users_, noise_dbm_);
    local_sinr_ = radio::local_sinr_db(user_sinr_, users_.attachment, n_cells(), config_.sinr_floor_db);
    global_sinr_ = radio::global_sinr_db(user_sinr_);
}

void NetworkEnv::rebuild_observations() {
    JointState cells{cell_observations(deployment_, user_sinr_, users_.attachment, norm_)};
    if (config_.split_agents) {
        // The split graph only depends on the cell graph, which is fixed for the episode.
        auto split = split_agents_per_parameter(cells, cell_graph_, config_.scenario);
        state_ = std::move(split.state);
        if (steps_ == 0) agent_graph_ = std::make_shared<const NetworkGraph>(std::move(split.graph));
    } else {
        state_ = std::move(cells);
        if (steps_ == 0) agent_graph_ = std::make_shared<const NetworkGraph>(cell_graph_);
    }
}

StepResult NetworkEnv::step(std::span<const int> actions) {
    if (!started_) throw InvalidState("step() called before reset()");
    if (done()) throw InvalidState("episode finished; call reset()");
    if (actions.size() != n_agents()) throw InvalidArgument("action count does not match agent count");
    const int n_actions = actions_per_agent();
    for (int a : actions) {
        if (a < 0 || a >= n_actions) throw InvalidArgument("action index out of range");
    }

    std::vector<std::size_t> changed;
    for (std::size_t c = 0; c < n_cells(); ++c) {
        double d_tilt = 0.0;
        double d_power = 0.0;
        if (config_.scenario == Scenario::tilt) {
            d_tilt = kTiltStep * (actions[c] - 1);
        } else if (config_.split_agents) {
            d_tilt = kTiltStep * (actions[2 * c] - 1);
            d_power = kPowerStep * (actions[2 * c + 1] - 1);
        } else {
            d_tilt = kTiltStep * (actions[c] / 3 - 1);
            d_power = kPowerStep * (actions[c] % 3 - 1);
        }
        auto& cell = deployment_.cells[c];
        const double tilt = radio::clamp_tilt(cell.tilt_deg + d_tilt);
        const double power = radio::clamp_power(cell.max_power_w + d_power);
        if (tilt != cell.tilt_deg || power != cell.max_power_w) {
            cell.tilt_deg = tilt;
            cell.max_power_w = power;
            changed.push_back(c);
        }
    }
    recompute_radio(changed);
    ++steps_;
    rebuild_observations();

    StepResult r;
    r.reward = global_reward();
    r.agent_rewards = agent_rewards();
    r.done = done();
    return r;
}

void NetworkEnv::set_tilts(std::span<const double> tilts_deg) {
    if (tilts_deg.size() != n_cells()) throw InvalidArgument("one tilt per cell required");
    std::vector<std::size_t> all(n_cells());
    for (std::size_t c = 0; c < n_cells(); ++c) {
        deployment_.cells[c].tilt_deg = radio::clamp_tilt(tilts_deg[c]);
        all[c] = c;
    }
    recompute_radio(all);
    rebuild_observations();
}

void NetworkEnv::set_powers(std::span<const double> powers_w) {
    if (powers_w.size() != n_cells()) throw InvalidArgument("one power per cell required");
    std::vector<std::size_t> all(n_cells());
    for (std::size_t c = 0; c < n_cells(); ++c) {
        deployment_.cells[c].max_power_w = radio::clamp_power(powers_w[c]);
        all[c] = c;
    }
    recompute_radio(all);
    rebuild_observations();
}

std::vector<double> NetworkEnv::powers_w() const {
    std::vector<double> p(n_cells());
    for (std::size_t c = 0; c < p.size(); ++c) p[c] = deployment_.cells[c].max_power_w;
    return p;
}

double NetworkEnv::mean_power_w() const {
    const auto p = powers_w();
    return mean_of(p);
}

double NetworkEnv::global_reward() const {
    if (config_.scenario == Scenario::tilt) return reward_global_tilt(global_sinr_, norm_);
    return reward_global_joint(global_sinr_, powers_w(), config_.w, norm_);
}

std::vector<double> NetworkEnv::agent_rewards() const {
    std::vector<double> per_cell(n_cells());
    const auto p = powers_w();
    for (std::size_t c = 0; c < n_cells(); ++c) {
        per_cell[c] = config_.scenario == Scenario::tilt
                          ? reward_local_tilt(local_sinr_, cell_graph_, c, norm_)
                          : reward_local_joint(local_sinr_, p, cell_graph_, c, config_.w, norm_);
    }
    if (!config_.split_agents) return per_cell;
    std::vector<double> out(2 * n_cells());
    for (std::size_t c = 0; c < n_cells(); ++c) out[2 * c] = out[2 * c + 1] = per_cell[c];
    return out;
}

ScenarioFile NetworkEnv::snapshot_scenario() const {
    return ScenarioFile{to_string(config_.layout), episode_seed_, deployment_, users_.positions};
}

} // namespace gqn::env
