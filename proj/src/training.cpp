#include "aqe/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "aqe/checkpoint.hpp"
#include "aqe/errors.hpp"
#include "aqe/metrics.hpp"

namespace aqe {

namespace {
constexpr std::uint64_t kStreamEval = 6;
}

TrainRunResult run_training(const RunConfig& config,
                            const std::string& resume_from) {
    const AgentConfig agent_config = to_agent_config(config);
    const auto run_start = std::chrono::steady_clock::now();

    std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    TrainRunResult result;
    result.metrics_path = out_dir / (config.run_name + ".metrics.jsonl");
    result.checkpoint_path = out_dir / (config.run_name + ".ckpt");
    result.config_echo_path = out_dir / (config.run_name + ".config");

    {
        std::ofstream echo(result.config_echo_path, std::ios::trunc);
        if (!echo) throw IoError("cannot write config echo: " +
                                 result.config_echo_path.string());
        echo << echo_config(config);
    }

    std::unique_ptr<Env> env = make_env(config.env_spec);
    std::unique_ptr<Env> eval_env = make_env(config.env_spec);

    std::unique_ptr<Agent> agent;
    if (resume_from.empty()) {
        agent = std::make_unique<Agent>(agent_config, *env);
        // Fresh run starts a fresh metrics file.
        std::ofstream clear(result.metrics_path, std::ios::trunc);
    } else {
        const AgentCheckpoint ckpt = load_agent_checkpoint(resume_from);
        if (ckpt.env_spec != config.env_spec)
            throw InvalidStateError("resume: checkpoint env_spec '" +
                                    ckpt.env_spec + "' != config '" +
                                    config.env_spec + "'");
        agent = std::make_unique<Agent>(
            Agent::restore(agent_config, ckpt, *env));
    }

    double loss_accum = 0.0, objective_accum = 0.0;
    long updated_steps = 0;

    auto write_record = [&](double eval_mean, double eval_std) {
        MetricRecord r;
        r.env_steps = static_cast<long>(agent->env_steps());
        r.eval_return_mean = eval_mean;
        r.eval_return_std = eval_std;
        r.critic_loss_mean =
            updated_steps > 0 ? loss_accum / static_cast<double>(updated_steps)
                              : 0.0;
        r.actor_objective =
            updated_steps > 0
                ? objective_accum / static_cast<double>(updated_steps)
                : 0.0;
        r.alpha = agent->alpha();
        if (config.record_wallclock) {
            const auto now = std::chrono::steady_clock::now();
            r.wallclock_s =
                std::chrono::duration<double>(now - run_start).count();
        }
        append_metric(result.metrics_path, r);
        loss_accum = objective_accum = 0.0;
        updated_steps = 0;
        return r;
    };

    auto run_eval = [&]() {
        // Fresh stream per evaluation: identical reset states every time,
        // independent of the training streams.
        Rng eval_rng = Rng::stream(config.seed, kStreamEval);
        return evaluate_stats(agent->policy(), *eval_env,
                              config.eval_episodes, eval_rng);
    };

    if (resume_from.empty()) {
        const EvalStats stats = run_eval();
        write_record(stats.mean, stats.stddev);
        result.final_eval_return = stats.mean;
    }

    const long total = config.total_env_steps;
    while (static_cast<long>(agent->env_steps()) < total) {
        // On numeric divergence train_step throws with the step attached; the
        // checkpoint from the last evaluation point stays on disk as the
        // last-good state.
        const StepMetrics metrics = agent->train_step(*env);
        if (metrics.updated) {
            loss_accum += metrics.critic_loss_mean;
            objective_accum += metrics.actor_objective;
            ++updated_steps;
        }
        const long steps = static_cast<long>(agent->env_steps());
        if (steps % config.eval_every == 0 || steps == total) {
            const EvalStats stats = run_eval();
            write_record(stats.mean, stats.stddev);
            result.final_eval_return = stats.mean;
            save_agent_checkpoint(result.checkpoint_path,
                                  agent->checkpoint(*env, config.env_spec));
            if (!std::isnan(config.stop_at_return) &&
                stats.mean >= config.stop_at_return) {
                result.reached_stop_at = steps;
                break;
            }
        }
    }

    result.env_steps = static_cast<long>(agent->env_steps());
    save_agent_checkpoint(result.checkpoint_path,
                          agent->checkpoint(*env, config.env_spec));
    return result;
}

} // namespace aqe
