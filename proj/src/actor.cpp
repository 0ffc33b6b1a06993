#include "aqe/actor.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "aqe/critic.hpp"
#include "aqe/errors.hpp"

namespace aqe {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5 * log(2*pi)

double softplus(double x) {
    // log(1 + e^x) without overflow on either side.
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

/// log(1 - tanh(u)^2) in the form that stays finite for large |u|.
double tanh_log_jacobian(double u) {
    return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

void check_bounds(const Vec& low, const Vec& high) {
    if (low.size() != high.size())
        throw ShapeError("policy bounds: low/high lengths differ");
    if (low.size() == 0)
        throw std::invalid_argument("policy bounds: empty action space");
    for (int d = 0; d < low.size(); ++d)
        if (!(low(d) < high(d)))
            throw std::invalid_argument(
                "policy bounds: action_low must be < action_high elementwise");
}

} // namespace

PolicyParams init_policy(int obs_dim, const std::vector<int>& hidden_sizes,
                         const Vec& action_low, const Vec& action_high,
                         std::uint64_t seed) {
    check_bounds(action_low, action_high);
    std::vector<int> sizes;
    sizes.push_back(obs_dim);
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(2 * static_cast<int>(action_low.size()));
    Rng mix = Rng::stream(seed, 0x706f6c696379ULL); // "policy"
    PolicyParams p;
    p.net = init_network(sizes, mix.next_u64());
    p.action_low = action_low;
    p.action_high = action_high;
    return p;
}

ActionDist policy_dist(const PolicyParams& policy, const Vec& state) {
    const Mat out = forward(policy.net, state.transpose()); // (1 x 2A)
    if (!out.allFinite())
        throw NumericError("policy_dist: non-finite network output");
    const int a = policy.action_dim();
    ActionDist dist;
    dist.mean = out.row(0).head(a).transpose();
    dist.log_std = out.row(0)
                       .tail(a)
                       .transpose()
                       .cwiseMax(kLogStdMin)
                       .cwiseMin(kLogStdMax);
    dist.center = policy.center();
    dist.scale = policy.scale();
    return dist;
}

SampledAction sample_action(const ActionDist& dist, Rng& rng) {
    const int a = static_cast<int>(dist.mean.size());
    SampledAction s;
    s.action.resize(a);
    s.log_prob = 0.0;
    for (int d = 0; d < a; ++d) {
        const double z = rng.normal();
        const double sigma = std::exp(dist.log_std(d));
        const double u = dist.mean(d) + sigma * z;
        s.action(d) = dist.center(d) + dist.scale(d) * std::tanh(u);
        s.log_prob += -0.5 * z * z - dist.log_std(d) - kHalfLog2Pi -
                      tanh_log_jacobian(u) - std::log(dist.scale(d));
    }
    return s;
}

Vec deterministic_action(const ActionDist& dist) {
    return dist.center.array() +
           dist.scale.array() * dist.mean.array().tanh();
}

SampledBatch sample_actions(const PolicyParams& policy, const Mat& states,
                            Rng& rng) {
    const int b = static_cast<int>(states.rows());
    const int a = policy.action_dim();
    Mat z(b, a);
    for (int i = 0; i < b; ++i)
        for (int d = 0; d < a; ++d) z(i, d) = rng.normal();

    const Mat out = forward(policy.net, states); // (b x 2A)
    if (!out.allFinite())
        throw NumericError("sample_actions: non-finite network output");
    const Vec center = policy.center();
    const Vec scale = policy.scale();

    SampledBatch s;
    s.z = z;
    s.u.resize(b, a);
    s.actions.resize(b, a);
    s.log_prob = Vec::Zero(b);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < a; ++d) {
            const double log_std = std::clamp(out(i, a + d), kLogStdMin,
                                              kLogStdMax);
            const double u = out(i, d) + std::exp(log_std) * z(i, d);
            s.u(i, d) = u;
            s.actions(i, d) = center(d) + scale(d) * std::tanh(u);
            s.log_prob(i) += -0.5 * z(i, d) * z(i, d) - log_std - kHalfLog2Pi -
                             tanh_log_jacobian(u) - std::log(scale(d));
        }
    }
    return s;
}

double TemperatureState::alpha() const { return std::exp(log_alpha); }

void temperature_update(TemperatureState& temp, const Vec& batch_log_probs,
                        double learning_rate) {
    if (!temp.auto_tune) return;
    if (!batch_log_probs.allFinite())
        throw NumericError("temperature_update: non-finite log probs");
    // d/d(log_alpha) of mean(-exp(log_alpha) * (log_prob + target_entropy)).
    const double mean_excess =
        (batch_log_probs.array() + temp.target_entropy).mean();
    const double grad = -std::exp(temp.log_alpha) * mean_excess;

    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    temp.adam_t += 1;
    temp.adam_m = b1 * temp.adam_m + (1.0 - b1) * grad;
    temp.adam_v = b2 * temp.adam_v + (1.0 - b2) * grad * grad;
    const double m_hat =
        temp.adam_m / (1.0 - std::pow(b1, static_cast<double>(temp.adam_t)));
    const double v_hat =
        temp.adam_v / (1.0 - std::pow(b2, static_cast<double>(temp.adam_t)));
    temp.log_alpha -= learning_rate * m_hat / (std::sqrt(v_hat) + eps);
}

NetGrads actor_gradient(const PolicyParams& policy,
                        const CriticEnsemble& critics, const Mat& states,
                        double alpha, const Mat& z, double* objective_out,
                        Vec* log_probs_out) {
    const int b = static_cast<int>(states.rows());
    const int a = policy.action_dim();
    if (z.rows() != b || z.cols() != a)
        throw ShapeError("actor_gradient: noise shape mismatch");

    ForwardCache policy_cache;
    const Mat out = forward(policy.net, states, &policy_cache); // (b x 2A)
    const Vec center = policy.center();
    const Vec scale = policy.scale();

    // Squash the reparameterized draw and collect log-probabilities.
    Mat u(b, a), tanh_u(b, a), sigma(b, a);
    Mat clamp_active(b, a); // 1 where log_std passed the clamp untouched
    Mat actions(b, a);
    Vec log_probs = Vec::Zero(b);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < a; ++d) {
            const double raw = out(i, a + d);
            const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
            clamp_active(i, d) =
                (raw > kLogStdMin && raw < kLogStdMax) ? 1.0 : 0.0;
            sigma(i, d) = std::exp(log_std);
            u(i, d) = out(i, d) + sigma(i, d) * z(i, d);
            tanh_u(i, d) = std::tanh(u(i, d));
            actions(i, d) = center(d) + scale(d) * tanh_u(i, d);
            log_probs(i) += -0.5 * z(i, d) * z(i, d) - log_std - kHalfLog2Pi -
                            tanh_log_jacobian(u(i, d)) - std::log(scale(d));
        }
    }

    // Q path: mean over every online head, gradient taken through the
    // action input of each critic.
    const int n = critics.size();
    const int nh = n * critics.heads;
    const double head_weight = 1.0 / (static_cast<double>(nh) * b);
    Mat x(b, states.cols() + a);
    x.leftCols(states.cols()) = states;
    x.rightCols(a) = actions;

    double q_sum = 0.0;
    Mat dq_daction = Mat::Zero(b, a);
    for (int j = 0; j < n; ++j) {
        ForwardCache cache;
        const Mat q = forward(critics.online[j], x, &cache);
        q_sum += q.sum();
        const Mat head_grad = Mat::Constant(b, critics.heads, head_weight);
        auto [param_grads, input_grad] =
            backward(critics.online[j], cache, head_grad);
        (void)param_grads;
        dq_daction += input_grad.rightCols(a);
    }

    const double objective =
        q_sum / (static_cast<double>(nh) * b) -
        alpha * log_probs.mean();
    if (objective_out) *objective_out = objective;
    if (log_probs_out) *log_probs_out = log_probs;

    // Chain back to the policy outputs. With z held fixed,
    //   dlogpi/dmean    = 2 tanh(u)
    //   dlogpi/dlog_std = -1 + 2 tanh(u) * sigma * z
    // so per sample and dimension
    //   dJ/dmean    = gQ * scale * (1 - tanh(u)^2) - (alpha/b) * 2 tanh(u)
    //   dJ/dlog_std = dJ/dmean * sigma * z + alpha/b
    // where gQ already carries the 1/(N h b) head weighting. The log_std
    // column is zeroed where the clamp is saturated.
    const double alpha_per_sample = alpha / static_cast<double>(b);
    Mat output_grad(b, 2 * a);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < a; ++d) {
            const double t = tanh_u(i, d);
            const double du =
                dq_daction(i, d) * scale(d) * (1.0 - t * t) -
                alpha_per_sample * 2.0 * t;
            output_grad(i, d) = du;
            output_grad(i, a + d) =
                clamp_active(i, d) *
                (du * sigma(i, d) * z(i, d) + alpha_per_sample);
        }
    }
    auto [param_grads, input_grad] =
        backward(policy.net, policy_cache, output_grad);
    (void)input_grad;
    return param_grads;
}

ActorUpdate actor_update_with_noise(PolicyParams& policy,
                                    const CriticEnsemble& critics,
                                    const Mat& states, double alpha,
                                    double learning_rate, const Mat& z) {
    double objective = 0.0;
    Vec log_probs;
    NetGrads ascent =
        actor_gradient(policy, critics, states, alpha, z, &objective,
                       &log_probs);
    if (!std::isfinite(objective))
        throw NumericError("actor_update: non-finite objective; step skipped");
    // Adam minimizes, so feed the descent direction of -J.
    for (auto& w : ascent.weights) w = -w;
    for (auto& bg : ascent.biases) bg = -bg;
    adam_step(policy.net, ascent, learning_rate);
    return {objective, std::move(log_probs)};
}

ActorUpdate actor_update(PolicyParams& policy, const CriticEnsemble& critics,
                         const Mat& states, double alpha,
                         double learning_rate, Rng& rng) {
    const int b = static_cast<int>(states.rows());
    const int a = policy.action_dim();
    Mat z(b, a);
    for (int i = 0; i < b; ++i)
        for (int d = 0; d < a; ++d) z(i, d) = rng.normal();
    return actor_update_with_noise(policy, critics, states, alpha,
                                   learning_rate, z);
}

double actor_objective(const PolicyParams& policy,
                       const CriticEnsemble& critics, const Mat& states,
                       double alpha, const Mat& z) {
    const int b = static_cast<int>(states.rows());
    const int a = policy.action_dim();
    if (z.rows() != b || z.cols() != a)
        throw ShapeError("actor_objective: noise shape mismatch");
    const Mat out = forward(policy.net, states);
    const Vec center = policy.center();
    const Vec scale = policy.scale();

    Mat actions(b, a);
    Vec log_probs = Vec::Zero(b);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < a; ++d) {
            const double log_std = std::clamp(out(i, a + d), kLogStdMin,
                                              kLogStdMax);
            const double u = out(i, d) + std::exp(log_std) * z(i, d);
            actions(i, d) = center(d) + scale(d) * std::tanh(u);
            log_probs(i) += -0.5 * z(i, d) * z(i, d) - log_std - kHalfLog2Pi -
                            tanh_log_jacobian(u) - std::log(scale(d));
        }
    }
    const Mat q = q_all_heads(critics.online, critics.heads, states, actions);
    return q.sum() / static_cast<double>(q.size()) -
           alpha * log_probs.mean();
}

} // namespace aqe
