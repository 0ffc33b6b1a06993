#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aqe/network.hpp"
#include "aqe/rng.hpp"
#include "aqe/tabular_mdp.hpp"

namespace aqe {

/// N tabular Q-estimates updated toward a shared keep-K bootstrap target.
struct TabularEnsemble {
    std::vector<Mat> q; // N tables, each (S x A)
    int keep_k = 1;     // K
    double alpha = 1.0; // current learning rate
    double gamma = 0.99;

    int size() const { return static_cast<int>(q.size()); }
    int num_states() const { return static_cast<int>(q.front().rows()); }
    int num_actions() const { return static_cast<int>(q.front().cols()); }

    /// Mean table across members.
    Mat mean_q() const;
};

TabularEnsemble make_tabular_ensemble(int ensemble_size, int keep_k,
                                      int num_states, int num_actions,
                                      double alpha, double gamma,
                                      double init_value = 0.0);

/// The bootstrap value max_a' (1/K) sum of the K lowest member estimates at
/// (s_next, a'), K-lowest selected per action.
double tabular_aqe_bootstrap(const TabularEnsemble& ensemble, int s_next);

/// y = r + gamma * bootstrap(s_next); every member's Q(s, a) moves toward y
/// by the current alpha. Identically initialized members therefore stay
/// identical forever.
void tabular_aqe_update(TabularEnsemble& ensemble, int state, int action,
                        double reward, int s_next);

enum class BehaviorPolicy { EpsilonGreedyMean, UniformRandom };

struct TabularRunConfig {
    int ensemble_size = 4; // N
    int keep_k = 4;        // K
    double gamma = 0.99;
    BehaviorPolicy behavior = BehaviorPolicy::EpsilonGreedyMean;
    double epsilon = 0.1;
    /// Visit-count learning rate 1/(1+n(s,a))^0.8 when true, else fixed.
    bool decaying_alpha = true;
    double fixed_alpha = 0.1;
    long steps = 100000;
    std::uint64_t seed = 0;
    long log_every = 1000;
    double q_star_tol = 1e-10;
};

struct TabularRunResult {
    TabularEnsemble ensemble;
    Mat q_star;
    /// (step, sup-norm distance of the ensemble mean from Q*), recorded at
    /// step 0 and every log_every steps.
    std::vector<std::pair<long, double>> error_trace;
    double final_error = 0.0;
};

/// Runs the tabular loop on the MDP: pick actions with the behavior policy
/// over the ensemble mean (ties to the lowest index), step the MDP, update
/// every member toward the shared keep-K target.
///
/// Per-step randomness, in order: one uniform for the epsilon test (greedy
/// behavior only), one index draw when exploring, one uniform for the
/// transition.
TabularRunResult run_tabular_aqe(const TabularMdp& mdp,
                                 const TabularRunConfig& config);

} // namespace aqe
