// Command line front end: train, eval, sweep-w, heuristic-baseline.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "gqn/errors.hpp"
#include "gqn/harness.hpp"
#include "gqn/platform.hpp"

namespace {

using gqn::harness::ExperimentConfig;

// Every flag is optional so that only values given on the command line are applied.
struct Flags {
    std::optional<std::string> config_file, preset, algorithm, layout, scenario, reward_scope, output, gcn_aggregation;
    std::optional<int> sites, users, seeds, episode_length, eval_episodes, heuristic_episodes;
    std::optional<double> isd_min, isd_max, w, learning_rate;
    std::optional<std::int64_t> steps, epsilon_decay_steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> batch_size;
    std::optional<bool> split_agents, zero_head_init;
    bool trace = false;
    std::vector<double> w_list;
    std::string checkpoint, report;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config_file, "JSON config file; its keys override flags");
    app->add_option("--preset", f.preset, "desk (7 sites, 500 users, 3000 steps) or full");
    app->add_option("--algorithm", f.algorithm, "gqn, gqn_gat, dqn, ndqn, gaq");
    app->add_option("--layout", f.layout, "hex or random");
    app->add_option("--sites", f.sites, "number of sites");
    app->add_option("--isd-min", f.isd_min, "minimum intersite distance [m]");
    app->add_option("--isd-max", f.isd_max, "maximum intersite distance [m]");
    app->add_option("--users", f.users, "users per deployment");
    app->add_option("--scenario", f.scenario, "tilt or joint");
    app->add_option("--reward-scope", f.reward_scope, "global or local");
    app->add_option("--w", f.w, "power weight of the joint reward");
    app->add_option("--split-agents", f.split_agents, "one agent per parameter (joint scenario)");
    app->add_option("--seed", f.seed, "base seed; run k uses seed + k");
    app->add_option("--seeds", f.seeds, "number of independent runs");
    app->add_option("--episode-length", f.episode_length, "steps per episode");
    app->add_option("--steps", f.steps, "training steps");
    app->add_option("--batch-size", f.batch_size, "replay batch size");
    app->add_option("--lr", f.learning_rate, "learning rate");
    app->add_option("--gcn-aggregation", f.gcn_aggregation, "graph convolution neighbor aggregation: sum or mean");
    app->add_option("--zero-head-init", f.zero_head_init, "start the Q output layer at zero (true/false)");
    app->add_option("--epsilon-decay-steps", f.epsilon_decay_steps, "exploration decay length");
    app->add_option("--output", f.output, "output root (default $GQN_OUTPUT_ROOT or ./runs)");
    app->add_flag("--trace", f.trace, "also write a per-step trace.csv");
}

ExperimentConfig build_config(const Flags& f) {
    ExperimentConfig c;
    c.output_dir = gqn::harness::default_output_root();
    if (f.preset) c.apply_preset(*f.preset);
    if (f.algorithm) c.algorithm = *f.algorithm;
    if (f.layout) c.scenario.layout = gqn::env::parse_layout(*f.layout);
    if (f.sites) c.scenario.n_sites = *f.sites;
    if (f.isd_min) c.scenario.isd_min_m = *f.isd_min;
    if (f.isd_max) c.scenario.isd_max_m = *f.isd_max;
    if (f.users) c.scenario.n_users = *f.users;
    if (f.scenario) c.scenario.scenario = gqn::env::parse_scenario(*f.scenario);
    if (f.reward_scope) c.reward_scope = gqn::env::parse_reward_scope(*f.reward_scope);
    if (f.w) c.scenario.w = *f.w;
    if (f.split_agents) c.scenario.split_agents = *f.split_agents;
    if (f.seed) c.seed = *f.seed;
    if (f.seeds) c.n_seeds = *f.seeds;
    if (f.episode_length) c.scenario.episode_length = *f.episode_length;
    if (f.steps) c.steps = *f.steps;
    if (f.batch_size) c.batch_size = *f.batch_size;
    if (f.learning_rate) c.learning_rate = *f.learning_rate;
    if (f.gcn_aggregation) c.gcn_aggregation = *f.gcn_aggregation;
    if (f.zero_head_init) c.zero_head_init = *f.zero_head_init;
    if (f.epsilon_decay_steps) c.epsilon_decay_steps = *f.epsilon_decay_steps;
    if (f.output) c.output_dir = *f.output;
    if (f.eval_episodes) c.eval_episodes = *f.eval_episodes;
    if (f.heuristic_episodes) c.heuristic_episodes = *f.heuristic_episodes;
    if (f.trace) c.trace = true;
    if (!f.w_list.empty()) c.w_list = f.w_list;
    if (f.config_file) {
        std::ifstream in(*f.config_file);
        if (!in) throw gqn::InvalidArgument("cannot read config file " + *f.config_file);
        std::stringstream ss;
        ss << in.rdbuf();
        c.apply_json(ss.str());
    }
    return c;
}

void write_report(const std::string& path, const gqn::harness::EvalReport& r) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw gqn::InvalidState("cannot write " + path);
    out << gqn::harness::report_json(r) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    gqn::configure_allocator();
    CLI::App app{"Graph Q-network antenna tuning experiments"};
    app.require_subcommand(1);
    Flags f;

    auto* train = app.add_subcommand("train", "train one algorithm over several seeds");
    add_common(train, f);

    auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    add_common(eval, f);
    eval->add_option("--checkpoint", f.checkpoint, "checkpoint.bin to evaluate")->required();
    eval->add_option("--episodes", f.eval_episodes, "evaluation episodes (default 50)");
    eval->add_option("--report", f.report, "write the report as JSON");

    auto* sweep = app.add_subcommand("sweep-w", "train the joint scenario for several power weights");
    add_common(sweep, f);
    sweep->add_option("--w-list", f.w_list, "weights (default 0.05 0.1 0.15 0.2 0.5)");

    auto* heur = app.add_subcommand("heuristic-baseline", "roll out the geometric tilt heuristic");
    add_common(heur, f);
    heur->add_option("--episodes", f.heuristic_episodes, "episodes per seed (default 300)");
    heur->add_option("--report", f.report, "write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : gqn::harness::kConfigError;
    }

    ExperimentConfig cfg;
    try {
        cfg = build_config(f);
        cfg.validate();
    } catch (const std::exception& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return gqn::harness::kConfigError;
    }

    try {
        if (train->parsed()) {
            gqn::harness::cmd_train(cfg, std::cout);
        } else if (eval->parsed()) {
            write_report(f.report, gqn::harness::cmd_eval(f.checkpoint, cfg, std::cout));
        } else if (sweep->parsed()) {
            gqn::harness::cmd_sweep_w(cfg, std::cout);
        } else if (heur->parsed()) {
            write_report(f.report, gqn::harness::cmd_heuristic(cfg, std::cout));
        }
    } catch (const gqn::CheckpointIncompatible& e) {
        fmt::print(stderr, "checkpoint incompatible: {}\n", e.what());
        return gqn::harness::kCheckpointIncompatible;
    } catch (const gqn::InvalidArgument& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return gqn::harness::kConfigError;
    } catch (const std::exception& e) {
        fmt::print(stderr, "aborted: {}\n", e.what());
        return gqn::harness::kRuntimeAbort;
    }
    return gqn::harness::kOk;
}
