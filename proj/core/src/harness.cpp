#include "gqn/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "gqn/errors.hpp"
#include "gqn/metrics.hpp"

namespace gqn::harness {

using json = nlohmann::json;

namespace {

bool is_heuristic(const std::string& algorithm) { return algorithm == "heuristic"; }

template <typename T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument("config key '" + key + "' has the wrong type");
    }
}

double window_mean(const std::vector<train::EpisodeRecord>& eps, double train::EpisodeRecord::*field) {
    if (eps.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = std::min<std::size_t>(eps.size(), kFinalWindow);
    double s = 0.0;
    for (std::size_t i = eps.size() - n; i < eps.size(); ++i) s += eps[i].*field;
    return s / static_cast<double>(n);
}

json interval_json(const stats::Interval& iv) {
    return {{"mean", iv.mean}, {"half_width", iv.half_width}, {"lower", iv.lower()}, {"upper", iv.upper()}, {"n", iv.n}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InvalidState("cannot write " + path.string());
    out << text << '\n';
}

TrainSummary summarize(std::vector<RunSummary> runs) {
    TrainSummary s;
    s.runs = std::move(runs);
    std::vector<double> sinr, power;
    for (const auto& r : s.runs) {
        sinr.push_back(r.final_sinr_db);
        power.push_back(r.final_power_w);
    }
    if (!sinr.empty()) {
        s.sinr_db = stats::t_interval(sinr);
        s.power_w = stats::t_interval(power);
    }
    return s;
}

void write_summary(const std::filesystem::path& dir, const TrainSummary& s) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "summary.csv", std::ios::trunc);
    csv << "seed,final_sinr_db,final_power_w\n";
    for (const auto& r : s.runs) csv << fmt::format("{},{},{}\n", r.seed, r.final_sinr_db, r.final_power_w);
    json j;
    j["final_window_episodes"] = kFinalWindow;
    j["sinr_db"] = interval_json(s.sinr_db);
    j["power_w"] = interval_json(s.power_w);
    write_text(dir / "summary.json", j.dump(2));
}

} // namespace

// --- configuration ---------------------------------------------------------------

void ExperimentConfig::apply_preset(const std::string& name) {
    if (name == "desk") {
        scenario.layout = env::Layout::hex;
        scenario.n_sites = 7;
        scenario.n_users = 500;
        steps = 3000;
    } else if (name == "full") {
        scenario.layout = env::Layout::hex;
        scenario.n_sites = 19;
        scenario.n_users = 10000;
        steps = 20000;
    } else {
        throw InvalidArgument("unknown preset '" + name + "' (expected desk or full)");
    }
}

void ExperimentConfig::apply_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config file must hold a JSON object");
    if (j.contains("preset")) apply_preset(get_as<std::string>(j["preset"], "preset"));
    for (const auto& [key, v] : j.items()) {
        if (key == "preset") continue;
        else if (key == "algorithm") algorithm = get_as<std::string>(v, key);
        else if (key == "layout") scenario.layout = env::parse_layout(get_as<std::string>(v, key));
        else if (key == "sites") scenario.n_sites = get_as<int>(v, key);
        else if (key == "isd_min") scenario.isd_min_m = get_as<double>(v, key);
        else if (key == "isd_max") scenario.isd_max_m = get_as<double>(v, key);
        else if (key == "users") scenario.n_users = get_as<int>(v, key);
        else if (key == "scenario") scenario.scenario = env::parse_scenario(get_as<std::string>(v, key));
        else if (key == "reward_scope") reward_scope = env::parse_reward_scope(get_as<std::string>(v, key));
        else if (key == "gcn_aggregation") gcn_aggregation = get_as<std::string>(v, key);
        else if (key == "zero_head_init") zero_head_init = get_as<bool>(v, key);
        else if (key == "w") scenario.w = get_as<double>(v, key);
        else if (key == "split_agents") scenario.split_agents = get_as<bool>(v, key);
        else if (key == "seed") seed = get_as<std::uint64_t>(v, key);
        else if (key == "episode_length") scenario.episode_length = get_as<int>(v, key);
        else if (key == "steps") steps = get_as<std::int64_t>(v, key);
        else if (key == "seeds") n_seeds = get_as<int>(v, key);
        else if (key == "batch_size") batch_size = get_as<std::size_t>(v, key);
        else if (key == "learning_rate") learning_rate = get_as<double>(v, key);
        else if (key == "epsilon_decay_steps") epsilon_decay_steps = get_as<std::int64_t>(v, key);
        else if (key == "output") output_dir = get_as<std::string>(v, key);
        else if (key == "trace") trace = get_as<bool>(v, key);
        else if (key == "eval_episodes") eval_episodes = get_as<int>(v, key);
        else if (key == "heuristic_episodes") heuristic_episodes = get_as<int>(v, key);
        else if (key == "w_list") w_list = get_as<std::vector<double>>(v, key);
        else throw InvalidArgument("unknown config key '" + key + "'");
    }
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["algorithm"] = algorithm;
    j["layout"] = env::to_string(scenario.layout);
    j["sites"] = scenario.n_sites;
    j["isd_min"] = scenario.isd_min_m;
    j["isd_max"] = scenario.isd_max_m;
    j["users"] = scenario.n_users;
    j["scenario"] = env::to_string(scenario.scenario);
    if (reward_scope) j["reward_scope"] = env::to_string(*reward_scope);
    j["gcn_aggregation"] = gcn_aggregation;
    j["zero_head_init"] = zero_head_init;
    j["w"] = scenario.w;
    j["split_agents"] = scenario.split_agents;
    j["seed"] = seed;
    j["episode_length"] = scenario.episode_length;
    j["steps"] = steps;
    j["seeds"] = n_seeds;
    j["batch_size"] = batch_size;
    if (learning_rate) j["learning_rate"] = *learning_rate;
    if (epsilon_decay_steps) j["epsilon_decay_steps"] = *epsilon_decay_steps;
    j["output"] = output_dir.string();
    j["trace"] = trace;
    j["eval_episodes"] = eval_episodes;
    j["heuristic_episodes"] = heuristic_episodes;
    j["w_list"] = w_list;
    return j.dump(2);
}

void ExperimentConfig::validate() const {
    if (!is_heuristic(algorithm)) (void)parse_model_kind(algorithm);
    if (steps < 0) throw InvalidArgument("steps must be non-negative");
    if (n_seeds < 1) throw InvalidArgument("seeds must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be positive");
    if (learning_rate && !(*learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (gcn_aggregation != "sum" && gcn_aggregation != "mean") {
        throw InvalidArgument("gcn_aggregation must be sum or mean");
    }
    if (eval_episodes < 1 || heuristic_episodes < 1) throw InvalidArgument("episode counts must be positive");
    if (scenario.w < 0.0 || scenario.w > 1.0) throw InvalidArgument("w must lie in [0, 1]");
    for (double w : w_list) {
        if (w < 0.0 || w > 1.0) throw InvalidArgument("w_list entries must lie in [0, 1]");
    }
    env::NetworkEnv probe(scenario); // scenario-level checks
}

train::TrainConfig ExperimentConfig::train_config(std::uint64_t run_seed) const {
    train::TrainConfig tc;
    tc.scenario = scenario;
    tc.scenario.seed = run_seed;
    tc.algorithm = parse_model_kind(algorithm);
    tc.steps = steps;
    tc.seed = run_seed;
    tc.learner.batch_size = batch_size;
    tc.learning_rate = learning_rate;
    tc.epsilon_decay_steps = epsilon_decay_steps;
    tc.reward_scope = reward_scope;
    tc.gcn_mean_aggregation = gcn_aggregation == "mean";
    tc.zero_output_init = zero_head_init;
    tc.scenario.reward_scope = train::effective_reward_scope(tc);
    return tc;
}

std::filesystem::path default_output_root() {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') return root;
    return "runs";
}

std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& algorithm,
                                    const std::string& scenario_label, std::uint64_t run_seed) {
    return root / algorithm / scenario_label / fmt::format("seed{}", run_seed);
}

// --- commands --------------------------------------------------------------------

TrainSummary train_runs(const ExperimentConfig& cfg, const std::string& label, std::ostream& log) {
    cfg.validate();
    if (is_heuristic(cfg.algorithm)) throw InvalidArgument("use heuristic-baseline for the heuristic policy");
    std::vector<RunSummary> runs;
    for (int k = 0; k < cfg.n_seeds; ++k) {
        const auto seed = cfg.run_seed(k);
        const auto dir = run_directory(cfg.output_dir, cfg.algorithm, label, seed);
        std::filesystem::create_directories(dir);

        auto snap = json::parse(cfg.to_json());
        snap["run_seed"] = seed;
        snap["scenario_label"] = label;
        snap["effective_reward_scope"] = env::to_string(cfg.train_config(seed).scenario.reward_scope);
        write_text(dir / "config.snapshot", snap.dump(2));

        metrics::MetricsWriter writer(dir / "metrics.csv");
        std::optional<metrics::TraceWriter> trace;
        if (cfg.trace) trace.emplace(dir / "trace.csv");
        const auto on_step = [&](const train::StepTrace& s) {
            if (trace) trace->write(s);
        };
        auto result = train::run_training(cfg.train_config(seed), [&](const auto& r) { writer.write(r); }, on_step);
        train::save_trained(dir / "checkpoint.bin", result.learner->model(), result.schedule,
                            result.learner->train_steps(), result.env_steps);

        RunSummary rs;
        rs.seed = seed;
        rs.directory = dir;
        rs.final_sinr_db = window_mean(result.episodes, &train::EpisodeRecord::global_sinr_db);
        rs.final_power_w = window_mean(result.episodes, &train::EpisodeRecord::mean_power_w);
        fmt::print(log, "{} {} seed {}: {} episodes, final SINR {:.3f} dB, final power {:.2f} W\n", cfg.algorithm,
                   label, seed, result.episodes.size(), rs.final_sinr_db, rs.final_power_w);
        runs.push_back(rs);
    }
    auto summary = summarize(std::move(runs));
    write_summary(cfg.output_dir / cfg.algorithm / label, summary);
    fmt::print(log, "{} {}: SINR {:.3f} +/- {:.3f} dB, power {:.2f} +/- {:.2f} W over {} seeds\n", cfg.algorithm,
               label, summary.sinr_db.mean, summary.sinr_db.half_width, summary.power_w.mean,
               summary.power_w.half_width, summary.runs.size());
    return summary;
}

TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
    return train_runs(cfg, env::to_string(cfg.scenario.scenario), log);
}

namespace {

EvalReport report_from(const std::string& algorithm, std::size_t agents, const std::vector<train::RolloutResult>& rs) {
    std::vector<double> sinr, power, reward;
    for (const auto& r : rs) {
        sinr.push_back(r.global_sinr_db);
        power.push_back(r.mean_power_w);
        reward.push_back(r.reward_mean);
    }
    EvalReport rep;
    rep.algorithm = algorithm;
    rep.episodes = static_cast<int>(rs.size());
    rep.agents = agents;
    rep.sinr_db = stats::t_interval(sinr);
    rep.power_w = stats::t_interval(power);
    rep.reward = stats::t_interval(reward);
    return rep;
}

void print_report(std::ostream& log, const EvalReport& r) {
    fmt::print(log, "{} on {} agents, {} episodes: SINR {:.3f} +/- {:.3f} dB, power {:.2f} +/- {:.2f} W\n",
               r.algorithm, r.agents, r.episodes, r.sinr_db.mean, r.sinr_db.half_width, r.power_w.mean,
               r.power_w.half_width);
}

} // namespace

EvalReport cmd_eval(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    auto loaded = train::load_trained(checkpoint);
    env::NetworkEnv e(cfg.scenario);
    std::vector<train::RolloutResult> rs;
    for (int k = 0; k < cfg.eval_episodes; ++k) {
        rs.push_back(train::greedy_episode(*loaded.model, e, train::eval_episode_seed(cfg.seed, k)));
    }
    auto rep = report_from(loaded.algorithm, e.n_agents(), rs);
    print_report(log, rep);
    return rep;
}

std::vector<SweepRow> cmd_sweep_w(const ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.scenario.scenario != env::Scenario::joint) throw InvalidArgument("sweep-w requires the joint scenario");
    std::vector<SweepRow> rows;
    for (double w : cfg.w_list) {
        auto c = cfg;
        c.scenario.w = w;
        rows.push_back({w, train_runs(c, fmt::format("joint_w{}", w), log)});
    }
    const auto dir = cfg.output_dir / cfg.algorithm;
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "sweep_w.csv", std::ios::trunc);
    csv << "w,sinr_db_mean,sinr_db_half_width,power_w_mean,power_w_half_width,seeds\n";
    for (const auto& r : rows) {
        csv << fmt::format("{},{},{},{},{},{}\n", r.w, r.summary.sinr_db.mean, r.summary.sinr_db.half_width,
                           r.summary.power_w.mean, r.summary.power_w.half_width, r.summary.runs.size());
    }
    return rows;
}

EvalReport cmd_heuristic(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    env::NetworkEnv e(cfg.scenario);
    const std::string label = env::to_string(cfg.scenario.scenario);
    std::vector<train::RolloutResult> all;
    std::vector<RunSummary> runs;
    for (int k = 0; k < cfg.n_seeds; ++k) {
        const auto seed = cfg.run_seed(k);
        const auto dir = run_directory(cfg.output_dir, "heuristic", label, seed);
        std::filesystem::create_directories(dir);
        auto snap = json::parse(cfg.to_json());
        snap["algorithm"] = "heuristic";
        snap["run_seed"] = seed;
        write_text(dir / "config.snapshot", snap.dump(2));
        metrics::MetricsWriter writer(dir / "metrics.csv");
        std::vector<train::EpisodeRecord> eps;
        // Same deployments as the training episodes of this seed.
        for (int ep = 0; ep < cfg.heuristic_episodes; ++ep) {
            const auto r = train::heuristic_episode(e, train::episode_seed(seed, ep));
            all.push_back(r);
            train::EpisodeRecord rec;
            rec.step = static_cast<std::int64_t>(ep + 1) * cfg.scenario.episode_length;
            rec.episode = ep;
            rec.epsilon = 0.0;
            rec.reward_mean = r.reward_mean;
            rec.global_sinr_db = r.global_sinr_db;
            rec.mean_power_w = r.mean_power_w;
            rec.seed = seed;
            rec.algorithm = "heuristic";
            writer.write(rec);
            eps.push_back(rec);
        }
        runs.push_back({seed, window_mean(eps, &train::EpisodeRecord::global_sinr_db),
                        window_mean(eps, &train::EpisodeRecord::mean_power_w), dir});
    }
    write_summary(cfg.output_dir / "heuristic" / label, summarize(std::move(runs)));
    auto rep = report_from("heuristic", e.n_agents(), all);
    print_report(log, rep);
    return rep;
}

std::string report_json(const EvalReport& r) {
    json j;
    j["algorithm"] = r.algorithm;
    j["episodes"] = r.episodes;
    j["agents"] = r.agents;
    j["sinr_db"] = interval_json(r.sinr_db);
    j["power_w"] = interval_json(r.power_w);
    j["reward"] = interval_json(r.reward);
    return j.dump(2);
}

} // namespace gqn::harness
