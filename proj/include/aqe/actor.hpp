#pragma once

#include <cstdint>
#include <vector>

#include "aqe/network.hpp"
#include "aqe/rng.hpp"

namespace aqe {

struct CriticEnsemble; // critic.hpp

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Squashed-Gaussian policy: the network emits (mean, log_std) per action
/// dimension; actions are tanh-squashed and affinely mapped into
/// [action_low, action_high].
struct PolicyParams {
    NetworkParams net; // output width = 2 * action_dim
    Vec action_low;
    Vec action_high;

    int action_dim() const { return static_cast<int>(action_low.size()); }
    Vec center() const { return 0.5 * (action_high + action_low); }
    Vec scale() const { return 0.5 * (action_high - action_low); }
};

PolicyParams init_policy(int obs_dim, const std::vector<int>& hidden_sizes,
                         const Vec& action_low, const Vec& action_high,
                         std::uint64_t seed);

/// Per-state action distribution, with the affine output map baked in so it
/// can be sampled standalone.
struct ActionDist {
    Vec mean;    // pre-squash Gaussian mean
    Vec log_std; // clamped into [kLogStdMin, kLogStdMax]
    Vec center;
    Vec scale;
};

ActionDist policy_dist(const PolicyParams& policy, const Vec& state);

struct SampledAction {
    Vec action;
    double log_prob;
};

/// Reparameterized draw: u ~ N(mean, std), action = center + scale*tanh(u).
/// log_prob includes the tanh and affine change-of-variables corrections,
/// with log(1 - tanh(u)^2) evaluated as 2*(log 2 - u - softplus(-2u)).
SampledAction sample_action(const ActionDist& dist, Rng& rng);

/// Mode of the squashed distribution: center + scale*tanh(mean).
Vec deterministic_action(const ActionDist& dist);

/// Batched sampling; states are rows. Noise is drawn row-major
/// (sample-by-sample, dimension within sample), matching sample_action.
struct SampledBatch {
    Mat actions;  // (batch x act_dim), env units
    Vec log_prob; // per sample
    Mat u;        // pre-squash draws
    Mat z;        // standard normal draws actually used
};

SampledBatch sample_actions(const PolicyParams& policy, const Mat& states,
                            Rng& rng);

/// Entropy temperature with its own scalar Adam state. When auto_tune is
/// false the update op is a no-op and alpha stays fixed.
struct TemperatureState {
    double log_alpha = 0.0;
    double target_entropy = -1.0;
    bool auto_tune = true;
    double adam_m = 0.0;
    double adam_v = 0.0;
    std::int64_t adam_t = 0;

    double alpha() const;
};

/// One Adam step on log_alpha minimizing
/// mean(-exp(log_alpha) * (log_prob + target_entropy)).
void temperature_update(TemperatureState& temp, const Vec& batch_log_probs,
                        double learning_rate);

struct ActorUpdate {
    double objective; // batch objective before the step
    Vec log_probs;    // per-sample log pi at the pre-step parameters
};

/// One Adam ascent step on
///   mean_b[ mean over all N*h online head values of Q(s, a_theta(s))
///           - alpha * log pi(a_theta(s)|s) ]
/// with the reparameterization pathway through the sampled action.
/// Throws NumericError (and leaves the policy untouched) if the objective
/// is not finite.
ActorUpdate actor_update(PolicyParams& policy, const CriticEnsemble& critics,
                         const Mat& states, double alpha,
                         double learning_rate, Rng& rng);

/// Same update with an externally fixed standard-normal draw z
/// (batch x act_dim); the rng-driven overload just draws z and calls this.
ActorUpdate actor_update_with_noise(PolicyParams& policy,
                                    const CriticEnsemble& critics,
                                    const Mat& states, double alpha,
                                    double learning_rate, const Mat& z);

/// The actor objective at fixed noise, without updating anything.
double actor_objective(const PolicyParams& policy,
                       const CriticEnsemble& critics, const Mat& states,
                       double alpha, const Mat& z);

/// Gradient of the actor objective (ascent direction) with respect to the
/// policy network parameters, at fixed noise.
NetGrads actor_gradient(const PolicyParams& policy,
                        const CriticEnsemble& critics, const Mat& states,
                        double alpha, const Mat& z, double* objective_out,
                        Vec* log_probs_out);

} // namespace aqe
