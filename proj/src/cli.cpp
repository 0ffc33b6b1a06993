#include "aqe/cli.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "aqe/bias_lab.hpp"
#include "aqe/checkpoint.hpp"
#include "aqe/errors.hpp"
#include "aqe/gradcheck.hpp"
#include "aqe/mc_bias.hpp"
#include "aqe/svg_plot.hpp"
#include "aqe/tabular_aqe.hpp"
#include "aqe/training.hpp"

namespace aqe {

namespace {

constexpr const char* kUsage = R"(usage: aqe <subcommand> [options]

subcommands:
  train     --config FILE | --key value ...   run a training run
            [--resume CKPT]
  eval      --ckpt FILE [--episodes N] [--seed S]
  bias      --ckpt FILE [--pairs N] [--gamma G] [--horizon H] [--seed S]
  tabular   --env_spec random_mdp:S=..,A=..,seed=.. [--N n] [--K k]
            [--steps n] [--gamma g] [--eps e] [--behavior eps_greedy|uniform]
            [--alpha a] [--seed s]
  theorem1  [--seed S] [--samples M] [--out FILE.json]
  gradcheck [--nets N] [--seed S]
  plot      --field FIELD --out FILE.svg METRICS.jsonl ...

Every train config key doubles as a --key value flag; flags win over the
config file. AQE_SEED serves as the seed when none is given.
)";

int usage_error(const std::string& message) {
    if (!message.empty()) std::cerr << "error: " << message << "\n";
    std::cerr << kUsage;
    return 2;
}

/// Splits "--key value" pairs; leftover positionals go to `positional`.
std::map<std::string, std::string> parse_flags(
    const std::vector<std::string>& args, std::size_t start,
    std::vector<std::string>* positional) {
    std::map<std::string, std::string> flags;
    for (std::size_t i = start; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg.rfind("--", 0) == 0) {
            if (i + 1 >= args.size())
                throw ParseError("flag " + arg + " is missing a value");
            flags[arg.substr(2)] = args[i + 1];
            ++i;
        } else if (positional) {
            positional->push_back(arg);
        } else {
            throw ParseError("unexpected argument '" + arg + "'");
        }
    }
    return flags;
}

std::string take(std::map<std::string, std::string>& flags,
                 const std::string& key, const std::string& fallback) {
    auto it = flags.find(key);
    if (it == flags.end()) return fallback;
    std::string v = it->second;
    flags.erase(it);
    return v;
}

void reject_leftover(const std::map<std::string, std::string>& flags) {
    if (!flags.empty())
        throw ParseError("unknown flag '--" + flags.begin()->first + "'");
}

int cmd_train(const std::vector<std::string>& args) {
    auto flags = parse_flags(args, 1, nullptr);
    const std::string config_path = take(flags, "config", "");
    const std::string resume = take(flags, "resume", "");
    std::vector<std::pair<std::string, std::string>> overrides(flags.begin(),
                                                               flags.end());
    const RunConfig config = parse_config(config_path, overrides);
    const TrainRunResult result = run_training(config, resume);
    std::cout << "run " << config.run_name << ": " << result.env_steps
              << " env steps, final eval return " << result.final_eval_return
              << "\nmetrics: " << result.metrics_path.string()
              << "\ncheckpoint: " << result.checkpoint_path.string() << "\n";
    return 0;
}

int cmd_eval(const std::vector<std::string>& args) {
    auto flags = parse_flags(args, 1, nullptr);
    const std::string ckpt_path = take(flags, "ckpt", "");
    if (ckpt_path.empty()) return usage_error("eval needs --ckpt");
    const int episodes = std::stoi(take(flags, "episodes", "10"));
    const std::uint64_t seed = std::stoull(take(flags, "seed", "0"));
    std::string env_spec = take(flags, "env_spec", "");
    reject_leftover(flags);

    const AgentCheckpoint ckpt = load_agent_checkpoint(ckpt_path);
    if (env_spec.empty()) env_spec = ckpt.env_spec;
    std::unique_ptr<Env> env = make_env(env_spec);
    Rng rng = Rng::stream(seed, 6);
    const EvalStats stats = evaluate_stats(ckpt.policy, *env, episodes, rng);
    std::cout << "eval_return_mean " << stats.mean << "\neval_return_std "
              << stats.stddev << "\n";
    return 0;
}

int cmd_bias(const std::vector<std::string>& args) {
    auto flags = parse_flags(args, 1, nullptr);
    const std::string ckpt_path = take(flags, "ckpt", "");
    if (ckpt_path.empty()) return usage_error("bias needs --ckpt");
    const int pairs = std::stoi(take(flags, "pairs", "20"));
    const double gamma = std::stod(take(flags, "gamma", "0.99"));
    const int horizon = std::stoi(take(flags, "horizon", "200"));
    const std::uint64_t seed = std::stoull(take(flags, "seed", "0"));
    reject_leftover(flags);

    const AgentCheckpoint ckpt = load_agent_checkpoint(ckpt_path);
    std::unique_ptr<Env> env = make_env(ckpt.env_spec);
    Rng rng = Rng::stream(seed, 7);
    const BiasReport report =
        normalized_bias(ckpt.policy, ckpt.critics.online, ckpt.critics.heads,
                        *env, pairs, gamma, horizon, rng);
    nlohmann::ordered_json j;
    j["mean_normalized_bias"] = report.mean_normalized_bias;
    j["std_normalized_bias"] = report.std_normalized_bias;
    j["num_pairs"] = report.num_pairs;
    j["mc_horizon"] = report.mc_horizon;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_tabular(const std::vector<std::string>& args) {
    auto flags = parse_flags(args, 1, nullptr);
    const std::string env_spec =
        take(flags, "env_spec", "random_mdp:S=5,A=3,seed=1");
    TabularRunConfig config;
    config.ensemble_size = std::stoi(take(flags, "N", "4"));
    config.keep_k = std::stoi(take(flags, "K",
                                   std::to_string(config.ensemble_size)));
    config.gamma = std::stod(take(flags, "gamma", "0.9"));
    config.epsilon = std::stod(take(flags, "eps", "0.1"));
    config.steps = std::stol(take(flags, "steps", "100000"));
    config.seed = std::stoull(take(flags, "seed", "0"));
    const std::string behavior = take(flags, "behavior", "eps_greedy");
    if (behavior == "uniform")
        config.behavior = BehaviorPolicy::UniformRandom;
    else if (behavior == "eps_greedy")
        config.behavior = BehaviorPolicy::EpsilonGreedyMean;
    else
        throw ParseError("tabular: unknown behavior '" + behavior + "'");
    const std::string alpha = take(flags, "alpha", "");
    if (!alpha.empty()) {
        config.decaying_alpha = false;
        config.fixed_alpha = std::stod(alpha);
    }
    const double reward_scale = std::stod(take(flags, "reward_scale", "1"));
    reject_leftover(flags);

    const TabularEnvSpec spec = parse_tabular_env_spec(env_spec);
    const TabularMdp mdp =
        make_random_mdp(spec.num_states, spec.num_actions, spec.seed,
                        reward_scale, config.gamma);
    const TabularRunResult result = run_tabular_aqe(mdp, config);

    nlohmann::ordered_json j;
    j["env_spec"] = env_spec;
    j["N"] = config.ensemble_size;
    j["K"] = config.keep_k;
    j["steps"] = config.steps;
    j["final_supnorm_error"] = result.final_error;
    j["trace"] = nlohmann::ordered_json::array();
    for (const auto& [step, err] : result.error_trace)
        j["trace"].push_back({{"step", step}, {"error", err}});
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_theorem1(const std::vector<std::string>& args) {
    auto flags = parse_flags(args, 1, nullptr);
    const std::uint64_t seed = std::stoull(take(flags, "seed", "0"));
    const long samples = std::stol(take(flags, "samples", "1000000"));
    const std::string out_path = take(flags, "out", "");
    reject_leftover(flags);

    const Theorem1Report report = theorem1_suite(seed, samples);
    const std::string json = theorem1_report_json(report);
    std::cout << json << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + out_path);
        out << json << "\n";
    }
    return report.all_pass ? 0 : 1;
}

int cmd_gradcheck(const std::vector<std::string>& args) {
    auto flags = parse_flags(args, 1, nullptr);
    const int nets = std::stoi(take(flags, "nets", "100"));
    const std::uint64_t seed = std::stoull(take(flags, "seed", "0"));
    reject_leftover(flags);
    const GradCheckResult result = gradient_check(nets, seed);
    std::printf("max relative error %.3e over %d networks (%.2f s)\n",
                result.max_rel_error, result.num_nets, result.seconds);
    return result.max_rel_error <= 1e-5 ? 0 : 1;
}

int cmd_plot(const std::vector<std::string>& args) {
    std::vector<std::string> positional;
    auto flags = parse_flags(args, 1, &positional);
    const std::string field = take(flags, "field", "eval_return_mean");
    const std::string out_path = take(flags, "out", "");
    if (out_path.empty()) return usage_error("plot needs --out");
    reject_leftover(flags);
    if (positional.empty())
        return usage_error("plot needs at least one metrics file");
    std::vector<std::filesystem::path> paths(positional.begin(),
                                             positional.end());
    plot_metrics(paths, field, out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    if (args.empty()) return usage_error("");
    const std::string& cmd = args[0];
    try {
        if (cmd == "train") return cmd_train(args);
        if (cmd == "eval") return cmd_eval(args);
        if (cmd == "bias") return cmd_bias(args);
        if (cmd == "tabular") return cmd_tabular(args);
        if (cmd == "theorem1") return cmd_theorem1(args);
        if (cmd == "gradcheck") return cmd_gradcheck(args);
        if (cmd == "plot") return cmd_plot(args);
        if (cmd == "--help" || cmd == "help") {
            std::cout << kUsage;
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return usage_error("unknown subcommand '" + cmd + "'");
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

} // namespace aqe
