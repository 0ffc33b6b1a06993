#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aqe/actor.hpp"
#include "aqe/network.hpp"
#include "aqe/replay.hpp"
#include "aqe/rng.hpp"

namespace aqe {

/// How the per-transition set of N*h target head values collapses into one
/// bootstrap value.
struct Aggregator {
    enum class Mode { KeepK, Mean, Median, RemoveMinMax };

    Mode mode = Mode::KeepK;
    int keep = 1; // K, only meaningful for KeepK

    static Aggregator keep_k(int k) { return {Mode::KeepK, k}; }
    static Aggregator mean() { return {Mode::Mean, 0}; }
    static Aggregator median() { return {Mode::Median, 0}; }
    static Aggregator remove_min_max() { return {Mode::RemoveMinMax, 0}; }

    /// Throws std::invalid_argument if the mode cannot act on num_values
    /// estimates (K out of [1, num_values]; RemoveMinMax needs >= 3).
    void validate(int num_values) const;

    std::string name() const;
    static Aggregator parse(const std::string& name, int k);
};

/// Collapse a value set. KeepK averages the K smallest values (summed in
/// ascending order, so KeepK(n) is bit-identical to Mean); Median averages
/// the two middle values for even counts; RemoveMinMax computes
/// (sum - min - max) / (n - 2) with the sum taken in index order.
double aggregate(std::span<const double> values, const Aggregator& agg);

/// N online Q-networks with their slow-moving target copies. Each network
/// has h output heads that share every layer except the final one, so one
/// network contributes h of the N*h estimates per (s, a).
struct CriticEnsemble {
    std::vector<NetworkParams> online;
    std::vector<NetworkParams> target;
    int heads = 1;

    int size() const { return static_cast<int>(online.size()); }
    int num_estimates() const { return size() * heads; }
    int input_dim() const { return online.front().input_dim(); }
};

/// N independently initialized networks of shape
/// [state_dim+action_dim, hidden..., heads]; targets start as exact copies.
CriticEnsemble init_ensemble(int ensemble_size, int heads, int state_dim,
                             int action_dim,
                             const std::vector<int>& hidden_sizes,
                             std::uint64_t seed);

/// All head values at (s, a): column j*heads + m holds head m of network j.
Mat q_all_heads(const std::vector<NetworkParams>& nets, int heads,
                const Mat& states, const Mat& actions, bool parallel = false);

/// Bootstrap targets, one per transition:
///   y = r + gamma * (1 - done) * (aggregate(target heads at (s', a'))
///                                 - alpha * log pi(a'|s'))
/// with a' freshly sampled from the policy per transition. Only the target
/// networks are read. Throws NumericError if any target is non-finite.
Vec compute_targets(const Batch& batch,
                    const std::vector<NetworkParams>& target_nets, int heads,
                    const PolicyParams& policy, double alpha, double gamma,
                    const Aggregator& agg, Rng& rng, bool parallel = false);

/// One Adam step per online network on the mean over batch and heads of
/// (head value - y)^2, all networks regressing to the same targets.
/// Returns the per-network pre-step losses. A non-finite loss throws
/// NumericError with that network left unmodified.
std::vector<double> critic_update(CriticEnsemble& ensemble, const Batch& batch,
                                  const Vec& targets, double learning_rate,
                                  bool parallel = false);

/// p_target <- retain * p_target + (1 - retain) * p_online, elementwise.
void polyak_update(std::vector<NetworkParams>& target_nets,
                   const std::vector<NetworkParams>& online_nets,
                   double retain);
void polyak_update(CriticEnsemble& ensemble, double retain);

} // namespace aqe
