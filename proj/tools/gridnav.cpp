#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gridnav/harness.hpp"
#include "gridnav/ppo.hpp"

namespace fs = std::filesystem;
using namespace gridnav;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Key-value config file; CLI flags override whatever it sets.
std::map<std::string, std::string> load_config(const std::string& path) {
    std::map<std::string, std::string> kv;
    if (path.empty()) return kv;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, value;
        if (ls >> key >> value) kv[key] = value;
    }
    return kv;
}

template <typename T>
void config_get(const std::map<std::string, std::string>& kv,
                const std::string& key, T& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream v(it->second);
    if constexpr (std::is_same_v<T, bool>) {
        std::string s = it->second;
        out = (s == "1" || s == "on" || s == "true");
    } else {
        v >> out;
    }
}

FootprintLibrary load_footprints(const std::string& path) {
    if (path.empty()) return FootprintLibrary::builtin();
    return FootprintLibrary::parse(read_file(path));
}

std::vector<bench::SuiteCase> load_suite(const fs::path& dir,
                                         const FootprintLibrary& footprints) {
    std::istringstream in(read_file(dir / "suite.txt"));
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "suite" || version != 1)
        throw std::runtime_error("not a suite index: " +
                                 (dir / "suite.txt").string());
    std::vector<bench::SuiteCase> suite;
    std::string id, map_file, scen_file;
    double d = 0.0;
    int step_limit = 0, conflicted = 0;
    while (in >> word >> id >> map_file >> scen_file >> d >> step_limit >>
           conflicted) {
        if (word != "case") throw std::runtime_error("malformed suite index");
        bench::SuiteCase sc;
        sc.id = id;
        sc.map = std::make_shared<GridMap>(parse_map(read_file(dir / map_file)));
        sc.scenario = parse_scenario(read_file(dir / scen_file), *sc.map,
                                     footprints, d, step_limit);
        sc.conflicted = conflicted != 0;
        suite.push_back(std::move(sc));
    }
    if (suite.empty()) throw std::runtime_error("empty suite: " + dir.string());
    return suite;
}

void save_suite(const fs::path& dir, const bench::GeneratedSuite& suite) {
    fs::create_directories(dir);
    std::ostringstream index;
    index << "suite 1\n";
    for (const auto& sc : suite.cases) {
        write_file(dir / (sc.id + ".map"), serialize_map(*sc.map));
        write_file(dir / (sc.id + ".scen"), serialize_scenario(sc.scenario));
        index << "case " << sc.id << ' ' << sc.id << ".map " << sc.id << ".scen "
              << sc.scenario.safety_distance << ' ' << sc.scenario.step_limit
              << ' ' << (sc.conflicted ? 1 : 0) << '\n';
    }
    write_file(dir / "suite.txt", index.str());
}

std::vector<Scenario> scenarios_of(const std::vector<bench::SuiteCase>& suite) {
    std::vector<Scenario> out;
    for (const auto& sc : suite) out.push_back(sc.scenario);
    return out;
}

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string config_file;
    bool deterministic_timing = false;
    std::string footprints_file;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--config", opts.config_file, "key-value config file");
    cmd->add_flag("--deterministic-timing", opts.deterministic_timing,
                  "charge replans by expansion count instead of wall clock");
    cmd->add_option("--footprints", opts.footprints_file,
                    "footprint library file (default: built-ins)");
}

EnvConfig make_env_config(const CommonOpts& opts,
                          const std::map<std::string, std::string>& kv,
                          bool shaping, bool mask, double rule_penalty) {
    EnvConfig env;
    env.deterministic_timing = opts.deterministic_timing;
    env.rules.shaping_enabled = shaping;
    env.rules.mask_enabled = mask;
    env.rules.rule_penalty = rule_penalty;
    config_get(kv, "lookahead", env.lookahead);
    config_get(kv, "goal_reward", env.goal_reward);
    config_get(kv, "collision_penalty", env.collision_penalty);
    config_get(kv, "replan_budget_seconds", env.replan_budget_seconds);
    config_get(kv, "seconds_per_expansion", env.seconds_per_expansion);
    config_get(kv, "speed", env.speed);
    return env;
}

rl::TrainConfig make_train_config(const CommonOpts& opts,
                                  const std::map<std::string, std::string>& kv) {
    rl::TrainConfig cfg;
    cfg.seed = opts.seed;
    config_get(kv, "learning_rate", cfg.learning_rate);
    config_get(kv, "gamma", cfg.gamma);
    config_get(kv, "clip", cfg.clip);
    config_get(kv, "total_env_steps", cfg.total_env_steps);
    config_get(kv, "episode_cap", cfg.episode_cap);
    config_get(kv, "gae_lambda", cfg.gae_lambda);
    config_get(kv, "epochs", cfg.epochs);
    config_get(kv, "minibatches", cfg.minibatches);
    config_get(kv, "entropy_coef", cfg.entropy_coef);
    config_get(kv, "value_coef", cfg.value_coef);
    config_get(kv, "grad_clip", cfg.grad_clip);
    config_get(kv, "episodes_per_update", cfg.episodes_per_update);
    config_get(kv, "hidden_dim", cfg.hidden_dim);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"footprint-aware multi-robot grid navigation toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a benchmark scenario suite");
    CommonOpts gen_opts;
    add_common(gen, gen_opts);
    std::string gen_out;
    bench::SuiteGenConfig gen_cfg;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--cases", gen_cfg.n_cases, "number of cases");
    gen->add_option("--rows", gen_cfg.rows, "map height");
    gen->add_option("--cols", gen_cfg.cols, "map width");
    gen->add_option("--agents", gen_cfg.n_agents, "agents per case");
    gen->add_option("--conflict-rate", gen_cfg.target_conflict_rate,
                    "fraction of cases whose guidance paths collide");
    gen->add_option("--footprint", gen_cfg.footprint, "agent footprint name");
    gen->add_option("--safety-distance", gen_cfg.safety_distance,
                    "minimum clearance d");
    gen->add_option("--step-limit", gen_cfg.step_limit, "episode step cap");

    // train
    auto* train = app.add_subcommand("train", "train a real-time policy");
    CommonOpts train_opts;
    add_common(train, train_opts);
    std::string train_suite, train_out;
    bool rules_on = true, mask_on = true, share_critic = true;
    double rule_penalty = -5.0;
    long train_steps = -1;
    train->add_option("--suite", train_suite, "training suite dir")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--steps", train_steps, "total environment steps");
    train->add_flag("--rules,!--no-rules", rules_on, "joint-action shaping rules");
    train->add_flag("--heuristic-mask,!--no-heuristic-mask", mask_on,
                    "heuristic action masking");
    train->add_flag("--share-critic,!--no-share-critic", share_critic,
                    "critic sees all agents' observations");
    train->add_option("--rule-penalty", rule_penalty, "shaping penalty P_rule");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a suite");
    CommonOpts eval_opts;
    add_common(eval, eval_opts);
    std::string eval_suite, eval_checkpoint, eval_report, eval_traces;
    double min_success = -1.0;
    bool eval_rules = true, eval_mask = true, eval_share = true;
    double eval_rule_penalty = -5.0;
    eval->add_option("--suite", eval_suite, "suite dir")->required();
    eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")
        ->required();
    eval->add_option("--report", eval_report, "CSV report path")->required();
    eval->add_option("--traces", eval_traces, "directory for episode traces");
    eval->add_option("--min-success", min_success,
                     "exit nonzero when success rate falls below this");
    eval->add_flag("--rules,!--no-rules", eval_rules, "");
    eval->add_flag("--heuristic-mask,!--no-heuristic-mask", eval_mask, "");
    eval->add_flag("--share-critic,!--no-share-critic", eval_share,
                   "must match the checkpoint");
    eval->add_option("--rule-penalty", eval_rule_penalty, "");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run a baseline on a suite");
    CommonOpts bench_opts;
    add_common(bench_cmd, bench_opts);
    std::string bench_suite, bench_report, bench_policy = "replanner";
    std::string bench_traces;
    bench_cmd->add_option("--suite", bench_suite, "suite dir")->required();
    bench_cmd->add_option("--report", bench_report, "CSV report path")
        ->required();
    bench_cmd->add_option("--policy", bench_policy, "replanner | rules")
        ->check(CLI::IsMember({"replanner", "rules"}));
    bench_cmd->add_option("--traces", bench_traces,
                          "directory for episode traces");

    // replay
    auto* replay = app.add_subcommand("replay", "render a trace step by step");
    CommonOpts replay_opts;
    add_common(replay, replay_opts);
    std::string replay_trace, replay_map;
    replay->add_option("--trace", replay_trace, "trace file")->required();
    replay->add_option("--map", replay_map, "map file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto kv = load_config(gen_opts.config_file);
            config_get(kv, "max_attempts", gen_cfg.max_attempts);
            auto footprints = load_footprints(gen_opts.footprints_file);
            auto suite = bench::generate_suite(gen_cfg, footprints, gen_opts.seed);
            save_suite(gen_out, suite);
            std::cout << "wrote " << suite.cases.size() << " cases to " << gen_out
                      << " (conflict rate " << suite.conflict_rate << ")\n";
            if (static_cast<int>(suite.cases.size()) < gen_cfg.n_cases) {
                std::cerr << "warning: only " << suite.cases.size() << " of "
                          << gen_cfg.n_cases << " cases generated\n";
                return 1;
            }
        } else if (*train) {
            auto kv = load_config(train_opts.config_file);
            auto footprints = load_footprints(train_opts.footprints_file);
            auto suite = load_suite(train_suite, footprints);
            EnvConfig env = make_env_config(train_opts, kv, rules_on, mask_on,
                                            rule_penalty);
            rl::TrainConfig cfg = make_train_config(train_opts, kv);
            cfg.share_critic = share_critic;
            if (train_steps >= 0) cfg.total_env_steps = train_steps;

            rl::Trainer trainer(scenarios_of(suite), footprints, env, cfg);
            fs::create_directories(train_out);
            std::ofstream curve(fs::path(train_out) / "curve.csv");
            rl::TrainResult result = trainer.train(&curve);
            std::ofstream ckpt(fs::path(train_out) / "checkpoint.txt");
            trainer.save_checkpoint(ckpt);
            auto [eval_reward, eval_success] = trainer.evaluate();
            std::cout << "updates " << result.curve.size() << ", best update "
                      << result.best_update << ", eval reward " << eval_reward
                      << ", eval success " << eval_success
                      << (result.aborted ? " (aborted on divergence)" : "")
                      << '\n';
            return result.aborted ? 1 : 0;
        } else if (*eval) {
            auto kv = load_config(eval_opts.config_file);
            auto footprints = load_footprints(eval_opts.footprints_file);
            auto suite = load_suite(eval_suite, footprints);
            EnvConfig env = make_env_config(eval_opts, kv, eval_rules, eval_mask,
                                            eval_rule_penalty);
            rl::TrainConfig cfg = make_train_config(eval_opts, kv);
            cfg.share_critic = eval_share;
            rl::Trainer trainer(scenarios_of(suite), footprints, env, cfg);
            std::ifstream ckpt(eval_checkpoint);
            if (!ckpt) throw std::runtime_error("cannot open " + eval_checkpoint);
            trainer.load_checkpoint(ckpt);

            bench::LearnedPolicy policy(&trainer.actor());
            std::vector<bench::EpisodeTrace> traces;
            auto report = bench::run_suite(policy, suite, footprints, env,
                                           eval_traces.empty() ? nullptr
                                                               : &traces);
            write_file(eval_report, bench::report_csv(report));
            if (!eval_traces.empty()) {
                fs::create_directories(eval_traces);
                for (const auto& tr : traces)
                    write_file(fs::path(eval_traces) / (tr.case_id + ".trace"),
                               bench::serialize_trace(tr));
            }
            std::cout << "success rate " << report.success_rate << ", total "
                      << report.totals.total << '\n';
            if (min_success >= 0.0 && report.success_rate < min_success) return 2;
        } else if (*bench_cmd) {
            auto kv = load_config(bench_opts.config_file);
            auto footprints = load_footprints(bench_opts.footprints_file);
            auto suite = load_suite(bench_suite, footprints);
            // Baselines ignore rewards; rules only matter to the rules policy.
            EnvConfig env = make_env_config(bench_opts, kv, true, true, -5.0);
            bench::PureReplannerPolicy replanner;
            bench::RuleOnlyPolicy rules_policy;
            bench::Policy& policy =
                bench_policy == "rules"
                    ? static_cast<bench::Policy&>(rules_policy)
                    : static_cast<bench::Policy&>(replanner);
            std::vector<bench::EpisodeTrace> traces;
            auto report = bench::run_suite(policy, suite, footprints, env,
                                           bench_traces.empty() ? nullptr
                                                                : &traces);
            write_file(bench_report, bench::report_csv(report));
            if (!bench_traces.empty()) {
                fs::create_directories(bench_traces);
                for (const auto& tr : traces)
                    write_file(fs::path(bench_traces) / (tr.case_id + ".trace"),
                               bench::serialize_trace(tr));
            }
            std::cout << "success rate " << report.success_rate << ", total "
                      << report.totals.total << '\n';
        } else if (*replay) {
            GridMap map = parse_map(read_file(replay_map));
            bench::EpisodeTrace trace = bench::parse_trace(read_file(replay_trace));
            std::cout << bench::render_trace(trace, map);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
