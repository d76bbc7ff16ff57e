#pragma once

// Experiment orchestration behind the command line tool: configuration
// layering, seeded multi-run training, evaluation, w sweeps and the heuristic
// reference runs. Everything is written below one output root.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gqn/stats.hpp"
#include "gqn/trainer.hpp"

namespace gqn::harness {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeAbort = 3, kCheckpointIncompatible = 4 };

inline constexpr const char* kOutputRootEnv = "GQN_OUTPUT_ROOT";
inline constexpr int kFinalWindow = 10; // episodes averaged for "final" numbers

struct ExperimentConfig {
    std::string algorithm = "gqn"; // gqn, gqn_gat, dqn, ndqn, gaq or heuristic
    env::ScenarioConfig scenario;
    std::int64_t steps = 20000;
    int n_seeds = 3;
    std::uint64_t seed = 0; // run k uses seed + k
    std::size_t batch_size = 64;
    std::optional<double> learning_rate;
    std::optional<std::int64_t> epsilon_decay_steps;
    std::optional<env::RewardScope> reward_scope;
    std::string gcn_aggregation = "mean"; // sum or mean
    bool zero_head_init = true;
    std::filesystem::path output_dir = "runs";
    bool trace = false;
    int eval_episodes = 50;
    int heuristic_episodes = 300;
    std::vector<double> w_list{0.05, 0.1, 0.15, 0.2, 0.5};

    // Keys mirror the command line flags; unknown keys are rejected.
    void apply_json(const std::string& text);
    void apply_preset(const std::string& name);
    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] train::TrainConfig train_config(std::uint64_t run_seed) const;
    [[nodiscard]] std::uint64_t run_seed(int k) const { return seed + static_cast<std::uint64_t>(k); }
    void validate() const;
};

std::filesystem::path default_output_root();

std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& algorithm,
                                    const std::string& scenario_label, std::uint64_t run_seed);

struct RunSummary {
    std::uint64_t seed = 0;
    double final_sinr_db = 0.0;
    double final_power_w = 0.0;
    std::filesystem::path directory;
};

struct TrainSummary {
    std::vector<RunSummary> runs;
    stats::Interval sinr_db;
    stats::Interval power_w;
};

TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log);
// Same as cmd_train with `label` as the scenario directory name.
TrainSummary train_runs(const ExperimentConfig& cfg, const std::string& label, std::ostream& log);

struct EvalReport {
    std::string algorithm;
    int episodes = 0;
    std::size_t agents = 0;
    stats::Interval sinr_db;
    stats::Interval power_w;
    stats::Interval reward;
};

EvalReport cmd_eval(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg, std::ostream& log);

struct SweepRow {
    double w = 0.0;
    TrainSummary summary;
};

std::vector<SweepRow> cmd_sweep_w(const ExperimentConfig& cfg, std::ostream& log);

EvalReport cmd_heuristic(const ExperimentConfig& cfg, std::ostream& log);

std::string report_json(const EvalReport& r);

} // namespace gqn::harness
