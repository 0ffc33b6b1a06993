#include "aqe/critic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aqe/errors.hpp"
#include "aqe/parallel.hpp"

namespace aqe {

void Aggregator::validate(int num_values) const {
    if (num_values < 1)
        throw std::invalid_argument("Aggregator: need at least one value");
    switch (mode) {
    case Mode::KeepK:
        if (keep < 1 || keep > num_values)
            throw std::invalid_argument(
                "Aggregator: K = " + std::to_string(keep) +
                " outside [1, " + std::to_string(num_values) + "]");
        break;
    case Mode::RemoveMinMax:
        if (num_values < 3)
            throw std::invalid_argument(
                "Aggregator: RemoveMinMax needs at least 3 values, got " +
                std::to_string(num_values));
        break;
    case Mode::Mean:
    case Mode::Median:
        break;
    }
}

std::string Aggregator::name() const {
    switch (mode) {
    case Mode::KeepK: return "keepk";
    case Mode::Mean: return "mean";
    case Mode::Median: return "median";
    case Mode::RemoveMinMax: return "remove_min_max";
    }
    return "keepk";
}

Aggregator Aggregator::parse(const std::string& name, int k) {
    if (name == "keepk") return keep_k(k);
    if (name == "mean") return mean();
    if (name == "median") return median();
    if (name == "remove_min_max") return remove_min_max();
    throw std::invalid_argument("Aggregator: unknown mode '" + name +
                                "' (keepk, mean, median, remove_min_max)");
}

double aggregate(std::span<const double> values, const Aggregator& agg) {
    const int n = static_cast<int>(values.size());
    agg.validate(n);
    switch (agg.mode) {
    case Aggregator::Mode::KeepK:
    case Aggregator::Mode::Mean: {
        // Mean is KeepK with K = n; both sum the kept values in ascending
        // order so the two spellings coincide exactly.
        const int k = agg.mode == Aggregator::Mode::Mean ? n : agg.keep;
        std::vector<double> scratch(values.begin(), values.end());
        std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
        double sum = 0.0;
        for (int i = 0; i < k; ++i) sum += scratch[i];
        return sum / static_cast<double>(k);
    }
    case Aggregator::Mode::Median: {
        std::vector<double> scratch(values.begin(), values.end());
        std::sort(scratch.begin(), scratch.end());
        if (n % 2 == 1) return scratch[n / 2];
        return 0.5 * (scratch[n / 2 - 1] + scratch[n / 2]);
    }
    case Aggregator::Mode::RemoveMinMax: {
        double sum = 0.0;
        for (double v : values) sum += v;
        const double lo = *std::min_element(values.begin(), values.end());
        const double hi = *std::max_element(values.begin(), values.end());
        return (sum - lo - hi) / static_cast<double>(n - 2);
    }
    }
    throw std::invalid_argument("Aggregator: unreachable mode");
}

CriticEnsemble init_ensemble(int ensemble_size, int heads, int state_dim,
                             int action_dim,
                             const std::vector<int>& hidden_sizes,
                             std::uint64_t seed) {
    if (ensemble_size < 1)
        throw std::invalid_argument("init_ensemble: ensemble_size must be >= 1");
    if (heads < 1)
        throw std::invalid_argument("init_ensemble: heads must be >= 1");
    std::vector<int> sizes;
    sizes.push_back(state_dim + action_dim);
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(heads);

    CriticEnsemble ens;
    ens.heads = heads;
    ens.online.reserve(ensemble_size);
    ens.target.reserve(ensemble_size);
    for (int i = 0; i < ensemble_size; ++i) {
        Rng mix = Rng::stream(seed, 0x637269746963ULL + i); // "critic" + i
        ens.online.push_back(init_network(sizes, mix.next_u64()));
        ens.target.push_back(ens.online.back()); // targets start as copies
    }
    return ens;
}

namespace {

Mat concat_state_action(const Mat& states, const Mat& actions) {
    if (states.rows() != actions.rows())
        throw ShapeError("state/action batch sizes differ");
    Mat x(states.rows(), states.cols() + actions.cols());
    x.leftCols(states.cols()) = states;
    x.rightCols(actions.cols()) = actions;
    return x;
}

} // namespace

Mat q_all_heads(const std::vector<NetworkParams>& nets, int heads,
                const Mat& states, const Mat& actions, bool parallel) {
    if (nets.empty()) throw std::invalid_argument("q_all_heads: no networks");
    const Mat x = concat_state_action(states, actions);
    const int batch = static_cast<int>(x.rows());
    const int n = static_cast<int>(nets.size());
    Mat q(batch, n * heads);
    for_each_index(n, parallel, [&](std::size_t j) {
        if (nets[j].output_dim() != heads)
            throw ShapeError("q_all_heads: network output width != heads");
        q.middleCols(static_cast<int>(j) * heads, heads) = forward(nets[j], x);
    });
    return q;
}

Vec compute_targets(const Batch& batch,
                    const std::vector<NetworkParams>& target_nets, int heads,
                    const PolicyParams& policy, double alpha, double gamma,
                    const Aggregator& agg, Rng& rng, bool parallel) {
    const int b = batch.size();
    const int n = static_cast<int>(target_nets.size());
    agg.validate(n * heads);

    const SampledBatch next = sample_actions(policy, batch.next_states, rng);
    const Mat q = q_all_heads(target_nets, heads, batch.next_states,
                              next.actions, parallel);

    Vec y(b);
    std::vector<double> row(static_cast<std::size_t>(n) * heads);
    for (int i = 0; i < b; ++i) {
        for (int c = 0; c < n * heads; ++c) row[c] = q(i, c);
        const double agg_value = aggregate(row, agg);
        const double mask = 1.0 - batch.done_mask(i);
        y(i) = batch.rewards(i) +
               gamma * mask * (agg_value - alpha * next.log_prob(i));
    }
    if (!y.allFinite())
        throw NumericError("compute_targets: non-finite target value");
    return y;
}

std::vector<double> critic_update(CriticEnsemble& ensemble, const Batch& batch,
                                  const Vec& targets, double learning_rate,
                                  bool parallel) {
    const int b = batch.size();
    if (targets.size() != b)
        throw ShapeError("critic_update: targets/batch size mismatch");
    const Mat x = concat_state_action(batch.states, batch.actions);
    const int n = ensemble.size();
    const double h = static_cast<double>(ensemble.heads);
    std::vector<double> losses(n, 0.0);

    for_each_index(n, parallel && n > 1, [&](std::size_t j) {
        NetworkParams& net = ensemble.online[j];
        ForwardCache cache;
        const Mat q = forward(net, x, &cache); // (b x heads)
        const Mat residual = q.colwise() - targets;
        const double loss =
            residual.squaredNorm() / (static_cast<double>(b) * h);
        if (!std::isfinite(loss))
            throw NumericError("critic_update: non-finite loss for network " +
                               std::to_string(j) + "; step skipped");
        losses[j] = loss;
        const Mat grad = residual * (2.0 / (static_cast<double>(b) * h));
        auto [param_grads, input_grad] = backward(net, cache, grad);
        (void)input_grad;
        adam_step(net, param_grads, learning_rate);
    });
    return losses;
}

void polyak_update(std::vector<NetworkParams>& target_nets,
                   const std::vector<NetworkParams>& online_nets,
                   double retain) {
    if (retain < 0.0 || retain > 1.0)
        throw std::invalid_argument("polyak_update: retain must be in [0, 1]");
    if (target_nets.size() != online_nets.size())
        throw ShapeError("polyak_update: ensemble size mismatch");
    for (std::size_t j = 0; j < target_nets.size(); ++j) {
        NetworkParams& t = target_nets[j];
        const NetworkParams& o = online_nets[j];
        for (int l = 0; l < t.num_layers(); ++l) {
            t.weights[l] = retain * t.weights[l] + (1.0 - retain) * o.weights[l];
            t.biases[l] = retain * t.biases[l] + (1.0 - retain) * o.biases[l];
        }
        t.bump_revision();
    }
}

void polyak_update(CriticEnsemble& ensemble, double retain) {
    polyak_update(ensemble.target, ensemble.online, retain);
}

} // namespace aqe
