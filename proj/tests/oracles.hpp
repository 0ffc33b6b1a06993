#pragma once

// Test-only reference implementations, written independently of the library
// paths they check: plain loops, no shared kernels.

#include <algorithm>
#include <vector>

#include "aqe/network.hpp"

namespace aqe::test {

/// Naive per-sample, per-unit MLP forward: explicit loops, plain double
/// accumulation in index order.
inline Mat naive_forward(const NetworkParams& params, const Mat& input) {
    const int batch = static_cast<int>(input.rows());
    Mat activation = input;
    for (int l = 0; l < params.num_layers(); ++l) {
        const Mat& w = params.weights[l];
        const Vec& b = params.biases[l];
        Mat next(batch, w.rows());
        for (int s = 0; s < batch; ++s) {
            for (int r = 0; r < w.rows(); ++r) {
                double acc = b(r);
                for (int c = 0; c < w.cols(); ++c)
                    acc += w(r, c) * activation(s, c);
                if (l + 1 < params.num_layers() && acc < 0.0) acc = 0.0;
                next(s, r) = acc;
            }
        }
        activation = std::move(next);
    }
    return activation;
}

/// Sort-based keep-K oracle: full ascending sort, sum of the first k in
/// sorted order.
inline double sort_keep_k(std::vector<double> values, int k) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += values[i];
    return sum / static_cast<double>(k);
}

inline double sort_median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// (sum - min - max) / (n - 2), the sum in index order.
inline double drop_extremes_mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    return (sum - lo - hi) / static_cast<double>(values.size() - 2);
}

} // namespace aqe::test
