#include "aqe/tabular_aqe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aqe/errors.hpp"

namespace aqe {

Mat TabularEnsemble::mean_q() const {
    Mat m = Mat::Zero(q.front().rows(), q.front().cols());
    for (const Mat& table : q) m += table;
    return m / static_cast<double>(q.size());
}

TabularEnsemble make_tabular_ensemble(int ensemble_size, int keep_k,
                                      int num_states, int num_actions,
                                      double alpha, double gamma,
                                      double init_value) {
    if (ensemble_size < 1)
        throw std::invalid_argument("tabular ensemble: N must be >= 1");
    if (keep_k < 1 || keep_k > ensemble_size)
        throw std::invalid_argument("tabular ensemble: K must be in [1, N]");
    if (alpha <= 0.0 || alpha > 1.0)
        throw std::invalid_argument("tabular ensemble: alpha must be in (0, 1]");
    TabularEnsemble ens;
    ens.q.assign(ensemble_size,
                 Mat::Constant(num_states, num_actions, init_value));
    ens.keep_k = keep_k;
    ens.alpha = alpha;
    ens.gamma = gamma;
    return ens;
}

double tabular_aqe_bootstrap(const TabularEnsemble& ens, int s_next) {
    const int n = ens.size();
    const int k = ens.keep_k;
    std::vector<double> members(n);
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < ens.num_actions(); ++a) {
        for (int j = 0; j < n; ++j) members[j] = ens.q[j](s_next, a);
        std::partial_sort(members.begin(), members.begin() + k, members.end());
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += members[j];
        best = std::max(best, sum / static_cast<double>(k));
    }
    return best;
}

void tabular_aqe_update(TabularEnsemble& ens, int state, int action,
                        double reward, int s_next) {
    const double y = reward + ens.gamma * tabular_aqe_bootstrap(ens, s_next);
    for (Mat& table : ens.q)
        table(state, action) += ens.alpha * (y - table(state, action));
}

namespace {

int argmax_row_lowest_tie(const Mat& table, int row) {
    int best = 0;
    for (int a = 1; a < table.cols(); ++a)
        if (table(row, a) > table(row, best)) best = a;
    return best;
}

} // namespace

TabularRunResult run_tabular_aqe(const TabularMdp& mdp,
                                 const TabularRunConfig& config) {
    mdp.validate();
    if (config.steps < 0)
        throw std::invalid_argument("run_tabular_aqe: steps must be >= 0");
    const int S = mdp.num_states, A = mdp.num_actions;

    TabularRunResult result;
    result.q_star = value_iteration(mdp, config.q_star_tol);
    result.ensemble = make_tabular_ensemble(
        config.ensemble_size, config.keep_k, S, A,
        config.decaying_alpha ? 1.0 : config.fixed_alpha, config.gamma);

    Rng rng = Rng::stream(config.seed, 0x746162756c6172ULL); // "tabular"
    Eigen::MatrixXi visits = Eigen::MatrixXi::Zero(S, A);
    Mat mean = result.ensemble.mean_q();

    auto record = [&](long step) {
        mean = result.ensemble.mean_q();
        const double err = (mean - result.q_star).cwiseAbs().maxCoeff();
        result.error_trace.emplace_back(step, err);
        return err;
    };
    record(0);

    int state = 0;
    for (long step = 0; step < config.steps; ++step) {
        int action;
        if (config.behavior == BehaviorPolicy::UniformRandom) {
            action = static_cast<int>(rng.index(A));
        } else {
            const double u = rng.uniform01();
            if (u < config.epsilon) {
                action = static_cast<int>(rng.index(A));
            } else {
                mean = result.ensemble.mean_q();
                action = argmax_row_lowest_tie(mean, state);
            }
        }
        const double reward = mdp.reward(state, action);
        const int s_next = mdp.sample_next(state, action, rng);
        if (config.decaying_alpha) {
            result.ensemble.alpha =
                1.0 / std::pow(1.0 + visits(state, action), 0.8);
        }
        visits(state, action) += 1;
        tabular_aqe_update(result.ensemble, state, action, reward, s_next);
        state = s_next;
        if (config.log_every > 0 && (step + 1) % config.log_every == 0)
            record(step + 1);
    }
    if (result.error_trace.back().first != config.steps) record(config.steps);
    result.final_error = result.error_trace.back().second;
    return result;
}

} // namespace aqe
