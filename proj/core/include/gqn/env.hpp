#pragma once

// Multi-agent antenna tuning environment on top of the radio model.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gqn/radio.hpp"
#include "gqn/scenario_io.hpp"

namespace gqn::env {

enum class Layout { hex, random };
enum class Scenario { tilt, joint };
enum class RewardScope { global, local };

std::string to_string(Layout v);
std::string to_string(Scenario v);
std::string to_string(RewardScope v);
Layout parse_layout(const std::string& s);
Scenario parse_scenario(const std::string& s);
RewardScope parse_reward_scope(const std::string& s);

inline constexpr int kCellFeatures = 9;
inline constexpr int kSplitTagFeatures = 2;

struct ScenarioConfig {
    Layout layout = Layout::hex;
    int n_sites = 19;
    double isd_min_m = 300.0;
    double isd_max_m = 1500.0;
    int n_users = 10000;
    Scenario scenario = Scenario::tilt;
    RewardScope reward_scope = RewardScope::global;
    double w = 0.15;
    bool split_agents = false;
    std::uint64_t seed = 0;
    int episode_length = 20;

    double fixed_power_w = 40.0;
    double map_half_extent_m = 6000.0;
    double sinr_floor_db = -10.0;
    double sinr_ceil_db = 30.0;
    int graph_max_neighbors = 6;
    double graph_distance_factor = 2.0; // d_max = factor * ISD
    // Accepted for completeness; interference is modeled at full load.
    double traffic_mbps_per_cell = 1.0;

    radio::RadioConfig radio;
};

// Affine maps into [-1, 1] with clamping.
struct Normalizer {
    double sinr_floor_db = -10.0;
    double sinr_ceil_db = 30.0;
    double map_half_extent_m = 6000.0;

    static Normalizer from(const ScenarioConfig& cfg);

    [[nodiscard]] double sinr(double db) const;
    [[nodiscard]] double tilt(double deg) const;
    [[nodiscard]] double power(double watts) const;
    [[nodiscard]] double position(double meters) const;
};

// Undirected graph over agents, adjacency lists kept sorted by node index.
class NetworkGraph {
public:
    NetworkGraph() = default;
    explicit NetworkGraph(std::size_t n) : neighbors_(n) {}

    static NetworkGraph from_edges(std::size_t n, std::span<const std::pair<int, int>> edges);

    void add_edge(int i, int j);
    [[nodiscard]] std::size_t size() const { return neighbors_.size(); }
    [[nodiscard]] const std::vector<int>& neighbors(std::size_t i) const { return neighbors_[i]; }
    [[nodiscard]] bool adjacent(int i, int j) const;
    [[nodiscard]] std::size_t edge_count() const;
    [[nodiscard]] Eigen::MatrixXd adjacency_matrix() const;

    // Interference coupling used to build the graph (cells x cells, dB); empty for derived graphs.
    Eigen::MatrixXd coupling;

    // Neighbors of i sorted by descending coupling (index order when coupling is empty).
    [[nodiscard]] std::vector<int> neighbors_by_coupling(std::size_t i) const;

    friend bool operator==(const NetworkGraph& a, const NetworkGraph& b) { return a.neighbors_ == b.neighbors_; }

private:
    std::vector<std::vector<int>> neighbors_;
};

// Mean over cell i's users of (RSRP from j - serving RSRP). Cells without users
// average over the whole population instead.
Eigen::MatrixXd interference_coupling(const radio::LinkBudget& link, std::span<const int> attachment);

// Connect each cell to its K strongest couplers within d_max site distance, then symmetrize.
NetworkGraph build_neighbor_graph(const radio::Deployment& deployment, const radio::LinkBudget& link,
                                  std::span<const int> attachment, int max_neighbors, double max_distance_m);

// Per-agent feature matrix (n_agents x dim).
struct JointState {
    Eigen::MatrixXd features;
};

// One tilt node and one power node per cell (interleaved: 2c tilt, 2c+1 power),
// features extended with a one-hot parameter tag.
struct SplitResult {
    JointState state;
    NetworkGraph graph;
};
SplitResult split_agents_per_parameter(const JointState& state, const NetworkGraph& graph, Scenario scenario);

// Linear-interpolated percentile (q in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

Eigen::MatrixXd cell_observations(const radio::Deployment& deployment, std::span<const double> user_sinr_db,
                                  std::span<const int> attachment, const Normalizer& norm);

// Reward functions. *_db variants evaluate the raw formulas on dB / watt
// quantities; the others return the normalized training signal in [-1, 1].
double reward_global_tilt(double global_sinr_db, const Normalizer& norm);
double local_tilt_reward_db(std::span<const double> local_sinr_db, const NetworkGraph& graph, std::size_t cell);
double reward_local_tilt(std::span<const double> local_sinr_db, const NetworkGraph& graph, std::size_t cell,
                         const Normalizer& norm);
double reward_global_joint(double global_sinr_db, std::span<const double> powers_w, double w, const Normalizer& norm);
double local_joint_reward_raw(std::span<const double> local_sinr_db, std::span<const double> powers_w,
                              const NetworkGraph& graph, std::size_t cell, double w);
double reward_local_joint(std::span<const double> local_sinr_db, std::span<const double> powers_w,
                          const NetworkGraph& graph, std::size_t cell, double w, const Normalizer& norm);

struct StepResult {
    double reward = 0.0;                // global reward
    std::vector<double> agent_rewards;  // local reward per agent
    bool done = false;
};

class NetworkEnv {
public:
    explicit NetworkEnv(ScenarioConfig config);

    // Samples a new deployment, users and initial settings from episode_seed.
    const JointState& reset(std::uint64_t episode_seed);
    // Starts an episode on a fixed topology (tilt/power taken from the file).
    const JointState& reset(const ScenarioFile& scenario);

    StepResult step(std::span<const int> actions);

    // Overwrite settings directly (used by the heuristic policy); recomputes the radio state.
    void set_tilts(std::span<const double> tilts_deg);
    void set_powers(std::span<const double> powers_w);

    [[nodiscard]] const ScenarioConfig& config() const { return config_; }
    [[nodiscard]] const Normalizer& normalizer() const { return norm_; }
    [[nodiscard]] std::size_t n_cells() const { return deployment_.cells.size(); }
    [[nodiscard]] std::size_t n_agents() const;
    [[nodiscard]] int actions_per_agent() const;
    [[nodiscard]] int observation_dim() const;

    [[nodiscard]] const JointState& state() const { return state_; }
    [[nodiscard]] const std::shared_ptr<const NetworkGraph>& agent_graph() const { return agent_graph_; }
    [[nodiscard]] const NetworkGraph& cell_graph() const { return cell_graph_; }
    [[nodiscard]] const radio::Deployment& deployment() const { return deployment_; }
    [[nodiscard]] const radio::UserPopulation& users() const { return users_; }
    [[nodiscard]] const radio::LinkBudget& link() const { return link_; }
    [[nodiscard]] const std::vector<double>& user_sinr_db() const { return user_sinr_; }
    [[nodiscard]] const std::vector<double>& local_sinr_db() const { return local_sinr_; }
    [[nodiscard]] double global_sinr_db() const { return global_sinr_; }
    [[nodiscard]] double mean_power_w() const;
    [[nodiscard]] std::vector<double> powers_w() const;
    [[nodiscard]] int step_count() const { return steps_; }
    [[nodiscard]] bool done() const { return steps_ >= config_.episode_length; }
    [[nodiscard]] double global_reward() const;
    [[nodiscard]] std::vector<double> agent_rewards() const;
    [[nodiscard]] ScenarioFile snapshot_scenario() const;

private:
    void start_episode();
    void recompute_radio(std::span<const std::size_t> changed_cells);
    void rebuild_observations();

    ScenarioConfig config_;
    Normalizer norm_;
    double noise_dbm_ = 0.0;
    std::uint64_t episode_seed_ = 0;

    radio::Deployment deployment_;
    radio::UserPopulation users_;
    radio::LinkBudget link_;
    std::vector<double> user_sinr_;
    std::vector<double> local_sinr_;
    double global_sinr_ = 0.0;

    NetworkGraph cell_graph_;
    std::shared_ptr<const NetworkGraph> agent_graph_;
    JointState state_;
    int steps_ = 0;
    bool started_ = false;
};

} // namespace gqn::env
