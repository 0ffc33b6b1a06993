#pragma once

#include <cstdint>
#include <vector>

#include "aqe/network.hpp"
#include "aqe/rng.hpp"

namespace aqe {

/// Finite MDP with dense transitions: transition[a](s, s') = P(s'|s, a),
/// reward(s, a) deterministic.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<Mat> transition; // one (S x S) row-stochastic matrix per action
    Mat reward;                  // (S x A)
    double gamma = 0.99;

    /// Checks row sums within 1e-12 of 1 and nonnegative entries.
    void validate() const;

    /// Draws s' ~ P(.|s, a) by one uniform and a CDF walk.
    int sample_next(int state, int action, Rng& rng) const;
};

/// Random MDP: transition rows from a symmetric Dirichlet(1), rewards
/// uniform in [0, reward_scale]. Deterministic given the seed.
TabularMdp make_random_mdp(int num_states, int num_actions, std::uint64_t seed,
                           double reward_scale, double gamma = 0.99);

/// Q* by value iteration: Q <- R + gamma * P max_a' Q, iterated until the
/// sup-norm change drops below tol. Successive residuals must contract by
/// at least gamma (checked each sweep); exceeding max_iters throws
/// NumericError.
Mat value_iteration(const TabularMdp& mdp, double tol,
                    long max_iters = 1000000);

/// Q^pi for a stochastic policy (rows of `policy` sum to 1):
/// Q <- R + gamma * P (sum_a' pi(a'|s') Q(s', a')).
Mat q_pi_evaluation(const TabularMdp& mdp, const Mat& policy, double tol,
                    long max_iters = 1000000);

} // namespace aqe
