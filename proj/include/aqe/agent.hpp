#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aqe/actor.hpp"
#include "aqe/critic.hpp"
#include "aqe/env.hpp"
#include "aqe/replay.hpp"

namespace aqe {

/// Everything one training run needs. Defaults follow the reference
/// hyperparameters: N=10 two-head critics, G=5 update rounds per step,
/// gamma 0.99, Adam at 3e-4, batches of 256 from a 1e6 buffer, 2x256 ReLU
/// networks for actor and critics.
struct AgentConfig {
    int ensemble_size = 10; // N
    int heads = 2;          // h
    Aggregator aggregator = Aggregator::keep_k(16);
    int updates_per_step = 5; // G
    double gamma = 0.99;
    double polyak_retain = 0.995;
    double learning_rate = 3e-4;
    int batch_size = 256;
    std::size_t buffer_capacity = 1000000;
    std::vector<int> critic_hidden = {256, 256};
    std::vector<int> policy_hidden = {256, 256};
    bool auto_alpha = true;
    double fixed_alpha = 0.2;
    // NaN means "use -action_dim".
    double target_entropy = std::numeric_limits<double>::quiet_NaN();
    long start_steps = 1000; // uniform-random warm-up actions
    std::uint64_t seed = 0;
    long total_env_steps = 30000;
    long eval_every = 1000;
    int eval_episodes = 10;
    bool parallel_critics = false;

    void validate() const;
};

/// Per-step training diagnostics. Loss/objective are zero until the buffer
/// holds a full batch and updates begin.
struct StepMetrics {
    double critic_loss_mean = 0.0;
    double actor_objective = 0.0;
    double alpha = 0.0;
    bool updated = false;
};

/// Serializable snapshot of a full training state; produced by
/// Agent::checkpoint and consumed by Agent::restore (see checkpoint.hpp for
/// the byte format).
struct AgentCheckpoint {
    std::string env_spec;
    std::uint64_t env_steps = 0;
    PolicyParams policy;
    TemperatureState temperature;
    CriticEnsemble critics;
    std::vector<Transition> buffer_data;
    std::size_t buffer_cursor = 0;
    std::size_t buffer_capacity = 0;
    std::string env_rng_state, act_rng_state, update_rng_state;
    bool episode_active = false;
    std::uint64_t episode_steps = 0;
    Vec current_obs;
    Vec env_snapshot;
};

/// The training loop state: policy, temperature, critic ensemble, replay
/// buffer and the rng streams that drive them. One instance per run; not
/// safe for concurrent mutation.
class Agent {
public:
    Agent(const AgentConfig& config, const Env& env_prototype);

    /// One environment step followed by G critic-update rounds (each: sample
    /// batch, compute targets from the target nets, one Adam step per online
    /// net, Polyak) and one actor + temperature update on a fresh batch.
    /// Updates start once the buffer holds a full batch. Numeric failures
    /// are rethrown with the environment step attached.
    StepMetrics train_step(Env& env);

    std::uint64_t env_steps() const { return env_steps_; }
    double alpha() const { return temperature_.alpha(); }

    const PolicyParams& policy() const { return policy_; }
    const CriticEnsemble& critics() const { return critics_; }
    const TemperatureState& temperature() const { return temperature_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const AgentConfig& config() const { return config_; }

    AgentCheckpoint checkpoint(const Env& env,
                               const std::string& env_spec) const;
    /// Rebuilds an agent mid-run; also restores the environment's state.
    static Agent restore(const AgentConfig& config, const AgentCheckpoint& ckpt,
                         Env& env);

private:
    Agent(const AgentConfig& config, int obs_dim, const Vec& low,
          const Vec& high);

    Vec select_action(const Vec& obs);
    void update_round();

    AgentConfig config_;
    PolicyParams policy_;
    TemperatureState temperature_;
    CriticEnsemble critics_;
    ReplayBuffer buffer_;
    Rng env_rng_, act_rng_, update_rng_;
    std::uint64_t env_steps_ = 0;
    bool episode_active_ = false;
    std::uint64_t episode_steps_ = 0;
    Vec obs_;
    StepMetrics last_metrics_;
};

struct EvalStats {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Runs `episodes` episodes with deterministic actions and returns the mean
/// and population std of the undiscounted episode returns. The rng only
/// drives environment resets and must be independent of training streams.
EvalStats evaluate_stats(const PolicyParams& policy, Env& env, int episodes,
                         Rng& rng);

/// Mean undiscounted return of evaluate_stats.
double evaluate(const PolicyParams& policy, Env& env, int episodes, Rng& rng);

} // namespace aqe
