#include "aqe/gradcheck.hpp"

#include <chrono>
#include <cmath>

#include "aqe/rng.hpp"

namespace aqe {

namespace {

double loss_value(const NetworkParams& params, const Mat& input,
                  const Mat& output_grad) {
    return (forward(params, input).cwiseProduct(output_grad)).sum();
}

} // namespace

NetGrads finite_difference_grads(const NetworkParams& params, const Mat& input,
                                 const Mat& output_grad, double step) {
    NetGrads grads = zero_grads(params);
    NetworkParams probe = params;
    for (int l = 0; l < params.num_layers(); ++l) {
        for (int r = 0; r < params.weights[l].rows(); ++r) {
            for (int c = 0; c < params.weights[l].cols(); ++c) {
                const double saved = probe.weights[l](r, c);
                probe.weights[l](r, c) = saved + step;
                const double up = loss_value(probe, input, output_grad);
                probe.weights[l](r, c) = saved - step;
                const double down = loss_value(probe, input, output_grad);
                probe.weights[l](r, c) = saved;
                grads.weights[l](r, c) = (up - down) / (2.0 * step);
            }
        }
        for (int r = 0; r < params.biases[l].size(); ++r) {
            const double saved = probe.biases[l](r);
            probe.biases[l](r) = saved + step;
            const double up = loss_value(probe, input, output_grad);
            probe.biases[l](r) = saved - step;
            const double down = loss_value(probe, input, output_grad);
            probe.biases[l](r) = saved;
            grads.biases[l](r) = (up - down) / (2.0 * step);
        }
    }
    return grads;
}

double max_relative_error(const NetGrads& a, const NetGrads& b, double floor) {
    double worst = 0.0;
    auto compare = [&](double x, double y) {
        const double denom = std::max({std::abs(x), std::abs(y), floor});
        worst = std::max(worst, std::abs(x - y) / denom);
    };
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        for (int r = 0; r < a.weights[l].rows(); ++r)
            for (int c = 0; c < a.weights[l].cols(); ++c)
                compare(a.weights[l](r, c), b.weights[l](r, c));
        for (int r = 0; r < a.biases[l].size(); ++r)
            compare(a.biases[l](r), b.biases[l](r));
    }
    return worst;
}

GradCheckResult gradient_check(int num_nets, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng = Rng::stream(seed, 0x67726164ULL); // "grad"
    GradCheckResult result;
    result.num_nets = num_nets;
    for (int n = 0; n < num_nets; ++n) {
        const int depth = 1 + static_cast<int>(rng.index(3)); // 1-3 layers
        std::vector<int> sizes;
        for (int l = 0; l <= depth; ++l)
            sizes.push_back(1 + static_cast<int>(rng.index(8)));
        const NetworkParams net = init_network(sizes, rng.next_u64());

        const int batch = 1 + static_cast<int>(rng.index(4));
        Mat input(batch, sizes.front());
        for (int i = 0; i < input.rows(); ++i)
            for (int j = 0; j < input.cols(); ++j)
                input(i, j) = rng.uniform(-1.0, 1.0);
        Mat output_grad(batch, sizes.back());
        for (int i = 0; i < output_grad.rows(); ++i)
            for (int j = 0; j < output_grad.cols(); ++j)
                output_grad(i, j) = rng.uniform(-1.0, 1.0);

        ForwardCache cache;
        forward(net, input, &cache);
        auto [analytic, input_grad] = backward(net, cache, output_grad);
        (void)input_grad;
        const NetGrads reference =
            finite_difference_grads(net, input, output_grad);
        result.max_rel_error = std::max(
            result.max_rel_error, max_relative_error(analytic, reference));
    }
    const auto end = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(end - start).count();
    return result;
}

} // namespace aqe
