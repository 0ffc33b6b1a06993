#pragma once

#include "aqe/agent.hpp"
#include "aqe/env.hpp"
#include "aqe/rng.hpp"

namespace aqe {

/// Discounted Monte Carlo return: injects `state_snapshot`, executes
/// `start_action`, then follows the policy's deterministic actions for up to
/// `horizon` further steps (or until the episode ends), summing
/// gamma^t * r_t. Requires state injection.
double mc_return(Env& env, const PolicyParams& policy,
                 const Vec& state_snapshot, const Vec& start_action,
                 double gamma, int horizon);

struct BiasReport {
    double mean_normalized_bias = 0.0;
    double std_normalized_bias = 0.0;
    int num_pairs = 0;
    int mc_horizon = 0;
};

/// Q-estimate bias over policy-visited pairs: collects (s, a) pairs from
/// fresh stochastic rollouts, compares the mean over all N*h online head
/// values against the Monte Carlo return, and normalizes every per-pair
/// difference by max(|mean MC return|, 1e-6). Reports mean and population
/// std of the normalized differences.
BiasReport normalized_bias(const Agent& agent, Env& env, int num_pairs,
                           double gamma, int horizon, Rng& rng);

/// Same diagnostic from checkpointed pieces instead of a live agent.
BiasReport normalized_bias(const PolicyParams& policy,
                           const std::vector<NetworkParams>& online_nets,
                           int heads, Env& env, int num_pairs, double gamma,
                           int horizon, Rng& rng);

} // namespace aqe
