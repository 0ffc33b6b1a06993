#include "aqe/tabular_mdp.hpp"

#include <cmath>
#include <string>

#include "aqe/errors.hpp"

namespace aqe {

void TabularMdp::validate() const {
    if (num_states < 1 || num_actions < 1)
        throw std::invalid_argument("TabularMdp: S and A must be >= 1");
    if (static_cast<int>(transition.size()) != num_actions)
        throw ShapeError("TabularMdp: one transition matrix per action");
    for (int a = 0; a < num_actions; ++a) {
        const Mat& p = transition[a];
        if (p.rows() != num_states || p.cols() != num_states)
            throw ShapeError("TabularMdp: transition matrix shape mismatch");
        for (int s = 0; s < num_states; ++s) {
            if (p.row(s).minCoeff() < 0.0)
                throw std::invalid_argument(
                    "TabularMdp: negative transition probability");
            if (std::abs(p.row(s).sum() - 1.0) > 1e-12)
                throw std::invalid_argument(
                    "TabularMdp: transition row does not sum to 1");
        }
    }
    if (reward.rows() != num_states || reward.cols() != num_actions)
        throw ShapeError("TabularMdp: reward table shape mismatch");
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("TabularMdp: gamma must be in [0, 1)");
}

int TabularMdp::sample_next(int state, int action, Rng& rng) const {
    const double u = rng.uniform01();
    double cdf = 0.0;
    const Mat& p = transition[action];
    for (int s2 = 0; s2 < num_states; ++s2) {
        cdf += p(state, s2);
        if (u < cdf) return s2;
    }
    return num_states - 1; // guard against rounding at the top of the CDF
}

TabularMdp make_random_mdp(int num_states, int num_actions,
                           std::uint64_t seed, double reward_scale,
                           double gamma) {
    if (num_states < 1 || num_actions < 1)
        throw std::invalid_argument("make_random_mdp: S and A must be >= 1");
    Rng rng = Rng::stream(seed, 0x6d6470ULL); // "mdp"
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.gamma = gamma;
    mdp.transition.assign(num_actions, Mat(num_states, num_states));
    // Dirichlet(1) rows: normalized unit exponentials.
    for (int a = 0; a < num_actions; ++a) {
        for (int s = 0; s < num_states; ++s) {
            double total = 0.0;
            for (int s2 = 0; s2 < num_states; ++s2) {
                const double e = -std::log(1.0 - rng.uniform01());
                mdp.transition[a](s, s2) = e;
                total += e;
            }
            mdp.transition[a].row(s) /= total;
        }
    }
    mdp.reward.resize(num_states, num_actions);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
            mdp.reward(s, a) = rng.uniform(0.0, reward_scale);
    mdp.validate();
    return mdp;
}

namespace {

/// Shared fixed-point iteration; `backup(q, s)` returns the next-state value
/// used in Q(s,a) = R(s,a) + gamma * sum_s' P(s'|s,a) * backup(q, s').
template <typename Backup>
Mat bellman_fixed_point(const TabularMdp& mdp, double tol, long max_iters,
                        Backup&& backup, const char* what) {
    mdp.validate();
    if (tol <= 0.0) throw std::invalid_argument(std::string(what) +
                                                ": tol must be positive");
    const int S = mdp.num_states, A = mdp.num_actions;
    Mat q = Mat::Zero(S, A);
    double prev_residual = -1.0;
    for (long iter = 0; iter < max_iters; ++iter) {
        Vec next_value(S);
        for (int s = 0; s < S; ++s) next_value(s) = backup(q, s);
        Mat q_new(S, A);
        for (int a = 0; a < A; ++a)
            q_new.col(a) = mdp.reward.col(a) +
                           mdp.gamma * (mdp.transition[a] * next_value);
        const double residual = (q_new - q).cwiseAbs().maxCoeff();
        q = std::move(q_new);
        if (prev_residual >= 0.0 &&
            residual > mdp.gamma * prev_residual + 1e-13 * (1.0 + prev_residual))
            throw NumericError(std::string(what) +
                               ": residual failed to contract");
        prev_residual = residual;
        if (residual < tol) return q;
    }
    throw NumericError(std::string(what) + ": no convergence within " +
                       std::to_string(max_iters) + " iterations");
}

} // namespace

Mat value_iteration(const TabularMdp& mdp, double tol, long max_iters) {
    return bellman_fixed_point(
        mdp, tol, max_iters,
        [](const Mat& q, int s) { return q.row(s).maxCoeff(); },
        "value_iteration");
}

Mat q_pi_evaluation(const TabularMdp& mdp, const Mat& policy, double tol,
                    long max_iters) {
    if (policy.rows() != mdp.num_states || policy.cols() != mdp.num_actions)
        throw ShapeError("q_pi_evaluation: policy table shape mismatch");
    for (int s = 0; s < mdp.num_states; ++s)
        if (std::abs(policy.row(s).sum() - 1.0) > 1e-9 ||
            policy.row(s).minCoeff() < 0.0)
            throw std::invalid_argument(
                "q_pi_evaluation: policy rows must be distributions");
    return bellman_fixed_point(
        mdp, tol, max_iters,
        [&policy](const Mat& q, int s) { return policy.row(s).dot(q.row(s)); },
        "q_pi_evaluation");
}

} // namespace aqe
