#include "aqe/mc_bias.hpp"

#include <algorithm>
#include <cmath>

#include "aqe/critic.hpp"
#include "aqe/errors.hpp"

namespace aqe {

double mc_return(Env& env, const PolicyParams& policy,
                 const Vec& state_snapshot, const Vec& start_action,
                 double gamma, int horizon) {
    if (!env.supports_state_injection())
        throw UnsupportedFeatureError(
            "mc_return: environment does not support state injection");
    if (horizon < 0)
        throw std::invalid_argument("mc_return: horizon must be >= 0");
    env.restore_state(state_snapshot);
    StepResult r = env.step(start_action);
    double total = r.reward;
    double discount = gamma;
    for (int t = 0; t < horizon && !r.terminal && !r.truncated; ++t) {
        const Vec action = deterministic_action(policy_dist(policy, r.obs));
        r = env.step(action);
        total += discount * r.reward;
        discount *= gamma;
    }
    return total;
}

BiasReport normalized_bias(const PolicyParams& policy,
                           const std::vector<NetworkParams>& online_nets,
                           int heads, Env& env, int num_pairs, double gamma,
                           int horizon, Rng& rng) {
    if (num_pairs < 1)
        throw std::invalid_argument("normalized_bias: num_pairs must be >= 1");
    if (!env.supports_state_injection())
        throw UnsupportedFeatureError(
            "normalized_bias: environment does not support state injection");

    // Candidate pool from fresh stochastic rollouts, a few times larger than
    // needed so the selected pairs spread over episode phases.
    struct Pair {
        Vec snapshot;
        Vec action;
    };
    std::vector<Pair> pool;
    const std::size_t want = static_cast<std::size_t>(num_pairs) * 4;
    while (pool.size() < want) {
        Vec obs = env.reset(rng);
        while (true) {
            const Vec snapshot = env.snapshot_state();
            const SampledAction sampled =
                sample_action(policy_dist(policy, obs), rng);
            pool.push_back({snapshot, sampled.action});
            const StepResult r = env.step(sampled.action);
            obs = r.obs;
            if (r.terminal || r.truncated) break;
        }
    }
    // Fisher-Yates prefix: num_pairs distinct picks.
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int i = 0; i < num_pairs; ++i) {
        const std::size_t j = i + rng.index(order.size() - i);
        std::swap(order[i], order[j]);
    }

    Mat states(num_pairs, env.obs_dim());
    Mat actions(num_pairs, env.action_dim());
    Vec mc(num_pairs);
    for (int i = 0; i < num_pairs; ++i) {
        const Pair& p = pool[order[i]];
        states.row(i) = env.restore_state(p.snapshot).transpose();
        actions.row(i) = p.action.transpose();
        mc(i) = mc_return(env, policy, p.snapshot, p.action, gamma, horizon);
    }
    const Mat q = q_all_heads(online_nets, heads, states, actions);
    const Vec q_mean = q.rowwise().mean();

    const double denom = std::max(std::abs(mc.mean()), 1e-6);
    const Vec normalized = (q_mean - mc) / denom;
    BiasReport report;
    report.num_pairs = num_pairs;
    report.mc_horizon = horizon;
    report.mean_normalized_bias = normalized.mean();
    report.std_normalized_bias = std::sqrt(
        (normalized.array() - report.mean_normalized_bias).square().mean());
    return report;
}

BiasReport normalized_bias(const Agent& agent, Env& env, int num_pairs,
                           double gamma, int horizon, Rng& rng) {
    return normalized_bias(agent.policy(), agent.critics().online,
                           agent.critics().heads, env, num_pairs, gamma,
                           horizon, rng);
}

} // namespace aqe
