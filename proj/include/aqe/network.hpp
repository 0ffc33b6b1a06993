#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace aqe {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Gradients with the same layout as the parameters they belong to.
struct NetGrads {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
};

/// Dense ReLU network parameters plus Adam optimizer state.
///
/// weights[l] has shape (layer_sizes[l+1], layer_sizes[l]); biases[l] has
/// length layer_sizes[l+1]. Hidden layers use ReLU, the output layer is
/// linear. All arithmetic is double precision.
///
/// Value semantics: instances are freely copyable and movable; nothing is
/// shared, so distinct instances may be used from different threads.
struct NetworkParams {
    std::vector<int> layer_sizes;
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    std::vector<Mat> adam_m_w, adam_v_w;
    std::vector<Vec> adam_m_b, adam_v_b;
    std::int64_t adam_t = 0;

    // Identity of this parameter set for cache validation. net_uid is
    // assigned at init/deserialization; revision bumps on every mutation.
    std::uint64_t net_uid = 0;
    std::uint64_t revision = 0;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }
    void bump_revision() { ++revision; }
};

/// Pre- and post-activation values recorded by a forward pass; exactly what
/// backward() needs. post[0] is the input batch, post[l+1] = relu(pre[l])
/// for hidden layers and pre[l] for the output layer.
struct ForwardCache {
    std::vector<Mat> pre;
    std::vector<Mat> post;
    std::uint64_t net_uid = 0;
    std::uint64_t revision = 0;
};

/// Fresh network: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
/// biases zero, Adam state zero. Deterministic given (layer_sizes, rng_seed).
NetworkParams init_network(const std::vector<int>& layer_sizes,
                           std::uint64_t rng_seed);

/// Forward pass over a batch. Rows of `input` are samples, so `input` is
/// (batch x layer_sizes.front()) and the result is (batch x output_dim).
///
/// The matrix product accumulates over the input dimension in strictly
/// ascending index order for every output element, independent of the batch
/// width. Forwarding a batch is therefore bit-identical to forwarding each
/// row on its own.
Mat forward(const NetworkParams& params, const Mat& input,
            ForwardCache* cache = nullptr);

/// Reverse-mode gradients of sum(output .* output_grad) with respect to all
/// parameters and the input. `cache` must come from a forward() call on the
/// same (unmodified) parameters.
std::pair<NetGrads, Mat> backward(const NetworkParams& params,
                                  const ForwardCache& cache,
                                  const Mat& output_grad);

/// One bias-corrected Adam step (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
/// Throws NumericError on non-finite gradients without touching params.
void adam_step(NetworkParams& params, const NetGrads& grads,
               double learning_rate);

/// Total number of scalar parameters (weights + biases).
std::size_t param_count(const NetworkParams& params);

/// Zero-initialized gradients matching the parameter shapes.
NetGrads zero_grads(const NetworkParams& params);

namespace detail {
/// C (B x out) = X (B x in) * W^T with bias broadcast, accumulated in
/// ascending k order per element regardless of B.
void linear_forward(const Mat& weights, const Vec& bias, const Mat& input,
                    Mat& output);
} // namespace detail

} // namespace aqe
