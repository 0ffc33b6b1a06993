#include "aqe/agent.hpp"

#include <cmath>
#include <string>

#include "aqe/errors.hpp"

namespace aqe {

namespace {
// Stream ids for the independent rng streams an agent owns.
constexpr std::uint64_t kStreamPolicyInit = 1;
constexpr std::uint64_t kStreamCriticInit = 2;
constexpr std::uint64_t kStreamEnv = 3;
constexpr std::uint64_t kStreamAction = 4;
constexpr std::uint64_t kStreamUpdate = 5;
} // namespace

void AgentConfig::validate() const {
    if (ensemble_size < 1)
        throw std::invalid_argument("AgentConfig: N must be >= 1");
    if (heads < 1) throw std::invalid_argument("AgentConfig: h must be >= 1");
    aggregator.validate(ensemble_size * heads);
    if (updates_per_step < 1)
        throw std::invalid_argument("AgentConfig: G must be >= 1");
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("AgentConfig: gamma must be in [0, 1)");
    if (polyak_retain < 0.0 || polyak_retain > 1.0)
        throw std::invalid_argument(
            "AgentConfig: polyak_retain must be in [0, 1]");
    if (learning_rate <= 0.0)
        throw std::invalid_argument("AgentConfig: lr must be positive");
    if (batch_size < 1)
        throw std::invalid_argument("AgentConfig: batch_size must be >= 1");
    if (buffer_capacity == 0)
        throw std::invalid_argument("AgentConfig: buffer must be non-empty");
    if (critic_hidden.empty() || policy_hidden.empty())
        throw std::invalid_argument("AgentConfig: hidden sizes required");
    if (start_steps < 0)
        throw std::invalid_argument("AgentConfig: start_steps must be >= 0");
    if (eval_episodes < 1)
        throw std::invalid_argument("AgentConfig: eval_episodes must be >= 1");
    if (!auto_alpha && fixed_alpha < 0.0)
        throw std::invalid_argument("AgentConfig: fixed_alpha must be >= 0");
}

Agent::Agent(const AgentConfig& config, int obs_dim, const Vec& low,
             const Vec& high)
    : config_(config),
      policy_(init_policy(
          obs_dim, config.policy_hidden, low, high,
          Rng::stream(config.seed, kStreamPolicyInit).next_u64())),
      critics_(init_ensemble(
          config.ensemble_size, config.heads, obs_dim,
          static_cast<int>(low.size()), config.critic_hidden,
          Rng::stream(config.seed, kStreamCriticInit).next_u64())),
      buffer_(config.buffer_capacity, obs_dim, static_cast<int>(low.size())),
      env_rng_(Rng::stream(config.seed, kStreamEnv)),
      act_rng_(Rng::stream(config.seed, kStreamAction)),
      update_rng_(Rng::stream(config.seed, kStreamUpdate)) {
    temperature_.auto_tune = config.auto_alpha;
    temperature_.log_alpha =
        config.auto_alpha ? 0.0 : std::log(std::max(config.fixed_alpha, 1e-12));
    temperature_.target_entropy =
        std::isnan(config.target_entropy)
            ? -static_cast<double>(low.size())
            : config.target_entropy;
}

namespace {
const AgentConfig& validated(const AgentConfig& config) {
    config.validate();
    return config;
}
} // namespace

Agent::Agent(const AgentConfig& config, const Env& env_prototype)
    : Agent(validated(config), env_prototype.obs_dim(),
            env_prototype.action_low(), env_prototype.action_high()) {}

Vec Agent::select_action(const Vec& obs) {
    if (static_cast<long>(env_steps_) < config_.start_steps) {
        Vec a(policy_.action_dim());
        for (int d = 0; d < a.size(); ++d)
            a(d) = act_rng_.uniform(policy_.action_low(d),
                                    policy_.action_high(d));
        return a;
    }
    return sample_action(policy_dist(policy_, obs), act_rng_).action;
}

void Agent::update_round() {
    const Batch batch = buffer_.sample(config_.batch_size, update_rng_);
    const Vec targets =
        compute_targets(batch, critics_.target, critics_.heads, policy_,
                        temperature_.alpha(), config_.gamma,
                        config_.aggregator, update_rng_,
                        config_.parallel_critics);
    const std::vector<double> losses =
        critic_update(critics_, batch, targets, config_.learning_rate,
                      config_.parallel_critics);
    polyak_update(critics_, config_.polyak_retain);
    double sum = 0.0;
    for (double l : losses) sum += l;
    last_metrics_.critic_loss_mean += sum / static_cast<double>(losses.size());
}

StepMetrics Agent::train_step(Env& env) {
    try {
        if (!episode_active_) {
            obs_ = env.reset(env_rng_);
            episode_active_ = true;
            episode_steps_ = 0;
        }
        const Vec action = select_action(obs_);
        const StepResult result = env.step(action);
        Transition t;
        t.state = obs_;
        t.action = action;
        t.reward = result.reward;
        t.next_state = result.obs;
        t.done = result.terminal; // truncation keeps bootstrapping alive
        buffer_.push(t);
        obs_ = result.obs;
        episode_steps_ += 1;
        if (result.terminal || result.truncated) episode_active_ = false;
        env_steps_ += 1;

        last_metrics_ = StepMetrics{};
        last_metrics_.alpha = temperature_.alpha();
        if (buffer_.size() >= static_cast<std::size_t>(config_.batch_size)) {
            for (int g = 0; g < config_.updates_per_step; ++g) update_round();
            last_metrics_.critic_loss_mean /=
                static_cast<double>(config_.updates_per_step);

            const Batch fresh = buffer_.sample(config_.batch_size, update_rng_);
            const ActorUpdate result_a = actor_update(
                policy_, critics_, fresh.states, temperature_.alpha(),
                config_.learning_rate, update_rng_);
            temperature_update(temperature_, result_a.log_probs,
                               config_.learning_rate);
            last_metrics_.actor_objective = result_a.objective;
            last_metrics_.alpha = temperature_.alpha();
            last_metrics_.updated = true;
        }
        return last_metrics_;
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (env step " +
                           std::to_string(env_steps_ + 1) + ")");
    }
}

AgentCheckpoint Agent::checkpoint(const Env& env,
                                  const std::string& env_spec) const {
    AgentCheckpoint c;
    c.env_spec = env_spec;
    c.env_steps = env_steps_;
    c.policy = policy_;
    c.temperature = temperature_;
    c.critics = critics_;
    c.buffer_data.reserve(buffer_.size());
    for (std::size_t i = 0; i < buffer_.size(); ++i)
        c.buffer_data.push_back(buffer_.at(i));
    c.buffer_cursor = buffer_.cursor();
    c.buffer_capacity = buffer_.capacity();
    c.env_rng_state = env_rng_.save_state();
    c.act_rng_state = act_rng_.save_state();
    c.update_rng_state = update_rng_.save_state();
    c.episode_active = episode_active_;
    c.episode_steps = episode_steps_;
    c.current_obs = obs_;
    c.env_snapshot =
        env.supports_state_injection() ? env.snapshot_state() : Vec();
    return c;
}

Agent Agent::restore(const AgentConfig& config, const AgentCheckpoint& ckpt,
                     Env& env) {
    config.validate();
    if (ckpt.buffer_capacity != config.buffer_capacity)
        throw InvalidStateError(
            "Agent::restore: checkpoint buffer capacity differs from config");
    if (ckpt.critics.size() != config.ensemble_size ||
        ckpt.critics.heads != config.heads)
        throw InvalidStateError(
            "Agent::restore: checkpoint ensemble shape differs from config");
    Agent agent(config, env.obs_dim(), env.action_low(), env.action_high());
    agent.policy_ = ckpt.policy;
    agent.temperature_ = ckpt.temperature;
    agent.critics_ = ckpt.critics;
    agent.buffer_.restore(ckpt.buffer_data, ckpt.buffer_cursor);
    agent.env_rng_.restore_state(ckpt.env_rng_state);
    agent.act_rng_.restore_state(ckpt.act_rng_state);
    agent.update_rng_.restore_state(ckpt.update_rng_state);
    agent.env_steps_ = ckpt.env_steps;
    agent.episode_active_ = ckpt.episode_active;
    agent.episode_steps_ = ckpt.episode_steps;
    agent.obs_ = ckpt.current_obs;
    if (ckpt.env_snapshot.size() > 0) env.restore_state(ckpt.env_snapshot);
    return agent;
}

EvalStats evaluate_stats(const PolicyParams& policy, Env& env, int episodes,
                         Rng& rng) {
    if (episodes < 1)
        throw std::invalid_argument("evaluate: episodes must be >= 1");
    Vec returns(episodes);
    for (int e = 0; e < episodes; ++e) {
        Vec obs = env.reset(rng);
        double total = 0.0;
        while (true) {
            const Vec action = deterministic_action(policy_dist(policy, obs));
            const StepResult r = env.step(action);
            total += r.reward;
            obs = r.obs;
            if (r.terminal || r.truncated) break;
        }
        returns(e) = total;
    }
    EvalStats stats;
    stats.mean = returns.mean();
    stats.stddev =
        std::sqrt((returns.array() - stats.mean).square().mean());
    return stats;
}

double evaluate(const PolicyParams& policy, Env& env, int episodes,
                Rng& rng) {
    return evaluate_stats(policy, env, episodes, rng).mean;
}

} // namespace aqe
