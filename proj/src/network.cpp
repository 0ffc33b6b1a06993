#include "aqe/network.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "aqe/errors.hpp"
#include "aqe/rng.hpp"

namespace aqe {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::uint64_t next_net_uid() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

void check_sizes(const std::vector<int>& layer_sizes) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument(
            "init_network: layer_sizes needs at least input and output");
    for (int s : layer_sizes)
        if (s <= 0)
            throw std::invalid_argument(
                "init_network: layer sizes must be positive, got " +
                std::to_string(s));
}

} // namespace

namespace detail {

void linear_forward(const Mat& weights, const Vec& bias, const Mat& input,
                    Mat& output) {
    const int out = static_cast<int>(weights.rows());
    const int in = static_cast<int>(weights.cols());
    const int batch = static_cast<int>(input.rows());
    output.resize(batch, out);

    // Row-blocked axpy kernel. The k loop is the accumulation order for
    // every element; SIMD runs across the batch dimension only, so each
    // output element sees the same operation sequence for any batch width.
    constexpr int kRowBlock = 8;
    const double* wd = weights.data();
    const double* xd = input.data();
    double* cd = output.data();
    for (int r0 = 0; r0 < out; r0 += kRowBlock) {
        const int rb = std::min(kRowBlock, out - r0);
        for (int j = 0; j < rb; ++j) {
            double* cj = cd + static_cast<std::ptrdiff_t>(r0 + j) * batch;
            const double b = bias(r0 + j);
            for (int t = 0; t < batch; ++t) cj[t] = b;
        }
        for (int k = 0; k < in; ++k) {
            const double* xk = xd + static_cast<std::ptrdiff_t>(k) * batch;
            const double* wk = wd + static_cast<std::ptrdiff_t>(k) * out + r0;
            for (int j = 0; j < rb; ++j) {
                const double w = wk[j];
                double* cj = cd + static_cast<std::ptrdiff_t>(r0 + j) * batch;
                for (int t = 0; t < batch; ++t) cj[t] += w * xk[t];
            }
        }
    }
}

} // namespace detail

NetworkParams init_network(const std::vector<int>& layer_sizes,
                           std::uint64_t rng_seed) {
    check_sizes(layer_sizes);
    Rng rng = Rng::stream(rng_seed, /*stream_id=*/0x6e6574); // "net"
    NetworkParams p;
    p.layer_sizes = layer_sizes;
    const int L = static_cast<int>(layer_sizes.size()) - 1;
    p.weights.reserve(L);
    p.biases.reserve(L);
    for (int l = 0; l < L; ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Mat w(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Vec::Zero(out));
        p.adam_m_w.push_back(Mat::Zero(out, in));
        p.adam_v_w.push_back(Mat::Zero(out, in));
        p.adam_m_b.push_back(Vec::Zero(out));
        p.adam_v_b.push_back(Vec::Zero(out));
    }
    p.adam_t = 0;
    p.net_uid = next_net_uid();
    p.revision = 0;
    return p;
}

Mat forward(const NetworkParams& params, const Mat& input,
            ForwardCache* cache) {
    if (input.cols() != params.input_dim())
        throw ShapeError("forward: input width " + std::to_string(input.cols()) +
                         " != network input " +
                         std::to_string(params.input_dim()));
    const int L = params.num_layers();
    if (cache) {
        cache->pre.assign(L, Mat());
        cache->post.assign(L + 1, Mat());
        cache->post[0] = input;
        cache->net_uid = params.net_uid;
        cache->revision = params.revision;
    }
    Mat activation = input;
    Mat z;
    for (int l = 0; l < L; ++l) {
        detail::linear_forward(params.weights[l], params.biases[l], activation, z);
        if (cache) cache->pre[l] = z;
        if (l + 1 < L)
            activation = z.cwiseMax(0.0);
        else
            activation = z;
        if (cache) cache->post[l + 1] = activation;
    }
    return activation;
}

std::pair<NetGrads, Mat> backward(const NetworkParams& params,
                                  const ForwardCache& cache,
                                  const Mat& output_grad) {
    if (cache.net_uid != params.net_uid || cache.revision != params.revision)
        throw InvalidStateError(
            "backward: cache does not match these parameters (stale or from "
            "another network)");
    const int L = params.num_layers();
    if (static_cast<int>(cache.pre.size()) != L ||
        static_cast<int>(cache.post.size()) != L + 1)
        throw InvalidStateError("backward: incomplete forward cache");
    if (output_grad.rows() != cache.post[0].rows() ||
        output_grad.cols() != params.output_dim())
        throw ShapeError("backward: output_grad shape mismatch");

    NetGrads grads;
    grads.weights.resize(L);
    grads.biases.resize(L);
    Mat delta = output_grad; // (batch x layer width), output layer is linear
    for (int l = L - 1; l >= 0; --l) {
        grads.weights[l].noalias() = delta.transpose() * cache.post[l];
        grads.biases[l] = delta.colwise().sum();
        Mat prev = delta * params.weights[l]; // (batch x layer_sizes[l])
        if (l > 0) {
            // ReLU derivative from the previous layer's pre-activations.
            prev.array() *= (cache.pre[l - 1].array() > 0.0).cast<double>();
        }
        delta = std::move(prev);
    }
    return {std::move(grads), std::move(delta)};
}

void adam_step(NetworkParams& params, const NetGrads& grads,
               double learning_rate) {
    const int L = params.num_layers();
    if (static_cast<int>(grads.weights.size()) != L ||
        static_cast<int>(grads.biases.size()) != L)
        throw ShapeError("adam_step: gradient layer count mismatch");
    for (int l = 0; l < L; ++l) {
        if (grads.weights[l].rows() != params.weights[l].rows() ||
            grads.weights[l].cols() != params.weights[l].cols() ||
            grads.biases[l].size() != params.biases[l].size())
            throw ShapeError("adam_step: gradient shape mismatch at layer " +
                             std::to_string(l));
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite())
            throw NumericError("adam_step: non-finite gradient at layer " +
                               std::to_string(l) + "; update aborted");
    }
    params.adam_t += 1;
    const double t = static_cast<double>(params.adam_t);
    const double m_corr = 1.0 - std::pow(kAdamBeta1, t);
    const double v_corr = 1.0 - std::pow(kAdamBeta2, t);
    for (int l = 0; l < L; ++l) {
        auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
            p.array() -= learning_rate * (m.array() / m_corr) /
                         ((v.array() / v_corr).sqrt() + kAdamEps);
        };
        update(params.weights[l], params.adam_m_w[l], params.adam_v_w[l],
               grads.weights[l]);
        update(params.biases[l], params.adam_m_b[l], params.adam_v_b[l],
               grads.biases[l]);
    }
    params.bump_revision();
}

std::size_t param_count(const NetworkParams& params) {
    std::size_t n = 0;
    for (int l = 0; l < params.num_layers(); ++l)
        n += static_cast<std::size_t>(params.weights[l].size()) +
             static_cast<std::size_t>(params.biases[l].size());
    return n;
}

NetGrads zero_grads(const NetworkParams& params) {
    NetGrads g;
    for (int l = 0; l < params.num_layers(); ++l) {
        g.weights.push_back(
            Mat::Zero(params.weights[l].rows(), params.weights[l].cols()));
        g.biases.push_back(Vec::Zero(params.biases[l].size()));
    }
    return g;
}

} // namespace aqe
