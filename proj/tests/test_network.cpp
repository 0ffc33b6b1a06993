#include <doctest.h>

#include <cstring>

#include "aqe/errors.hpp"
#include "aqe/gradcheck.hpp"
#include "aqe/network.hpp"
#include "aqe/rng.hpp"
#include "oracles.hpp"

using namespace aqe;

namespace {

bool bitwise_equal(const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(),
                       sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool params_equal(const NetworkParams& a, const NetworkParams& b) {
    if (a.layer_sizes != b.layer_sizes || a.adam_t != b.adam_t) return false;
    for (int l = 0; l < a.num_layers(); ++l) {
        if (!bitwise_equal(a.weights[l], b.weights[l])) return false;
        if (a.biases[l] != b.biases[l]) return false;
        if (!bitwise_equal(a.adam_m_w[l], b.adam_m_w[l])) return false;
        if (!bitwise_equal(a.adam_v_w[l], b.adam_v_w[l])) return false;
    }
    return true;
}

Mat random_matrix(int rows, int cols, Rng& rng, double lo = -1.0,
                  double hi = 1.0) {
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
    return m;
}

} // namespace

TEST_CASE("init_network is deterministic per seed and seed-sensitive") {
    const std::vector<int> sizes{3, 256, 256, 1};
    const NetworkParams a = init_network(sizes, 42);
    const NetworkParams b = init_network(sizes, 42);
    const NetworkParams c = init_network(sizes, 43);
    CHECK(params_equal(a, b));
    bool all_same = true;
    for (int l = 0; l < a.num_layers() && all_same; ++l)
        all_same = bitwise_equal(a.weights[l], c.weights[l]);
    CHECK_FALSE(all_same);

    // Two hidden layers of 256: three weight matrices with the right shapes.
    REQUIRE(a.num_layers() == 3);
    CHECK(a.weights[0].rows() == 256);
    CHECK(a.weights[0].cols() == 3);
    CHECK(a.weights[1].rows() == 256);
    CHECK(a.weights[1].cols() == 256);
    CHECK(a.weights[2].rows() == 1);
    CHECK(a.weights[2].cols() == 256);
    CHECK(a.adam_t == 0);
    for (int l = 0; l < a.num_layers(); ++l) {
        CHECK(a.biases[l].isZero());
        CHECK(a.adam_m_w[l].isZero());
        CHECK(a.adam_v_w[l].isZero());
        const double bound = 1.0 / std::sqrt(double(a.weights[l].cols()));
        CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
    }
}

TEST_CASE("init_network rejects bad layer lists") {
    CHECK_THROWS_AS(init_network({}, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_network({4}, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_network({4, 0, 2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(init_network({4, -1}, 0), std::invalid_argument);
}

TEST_CASE("forward: zero parameters give zero output") {
    NetworkParams net = init_network({3, 5, 2}, 1);
    for (auto& w : net.weights) w.setZero();
    Rng rng = Rng::stream(9, 0);
    const Mat x = random_matrix(4, 3, rng);
    CHECK(forward(net, x).isZero());
}

TEST_CASE("forward: identity layers pass positive input through") {
    NetworkParams single = init_network({4, 4}, 1);
    single.weights[0] = Mat::Identity(4, 4);
    single.biases[0].setZero();
    Rng rng = Rng::stream(10, 0);
    const Mat x = random_matrix(3, 4, rng, 0.1, 1.0);
    CHECK((forward(single, x) - x).cwiseAbs().maxCoeff() == 0.0);

    // With a hidden layer the ReLU stays in its inactive region.
    NetworkParams deep = init_network({4, 4, 4}, 1);
    deep.weights[0] = Mat::Identity(4, 4);
    deep.weights[1] = Mat::Identity(4, 4);
    deep.biases[0].setZero();
    deep.biases[1].setZero();
    CHECK((forward(deep, x) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward rejects width mismatches") {
    const NetworkParams net = init_network({3, 4, 2}, 0);
    CHECK_THROWS_AS(forward(net, Mat::Zero(5, 4)), ShapeError);
}

TEST_CASE("forward matches the naive loop oracle") {
    Rng rng = Rng::stream(11, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int depth = 1 + static_cast<int>(rng.index(3));
        std::vector<int> sizes;
        for (int l = 0; l <= depth; ++l)
            sizes.push_back(1 + static_cast<int>(rng.index(7)));
        const NetworkParams net = init_network(sizes, rng.next_u64());
        const Mat x = random_matrix(1 + static_cast<int>(rng.index(5)),
                                    sizes.front(), rng);
        const Mat got = forward(net, x);
        const Mat want = test::naive_forward(net, x);
        CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("forward batches are bit-identical to row-by-row forwards") {
    Rng rng = Rng::stream(12, 0);
    const NetworkParams net = init_network({7, 33, 19, 3}, 5);
    const Mat x = random_matrix(25, 7, rng);
    const Mat batch = forward(net, x);
    for (int r = 0; r < x.rows(); ++r) {
        const Mat single = forward(net, Mat(x.row(r)));
        for (int c = 0; c < batch.cols(); ++c) {
            const double a = batch(r, c), b = single(0, c);
            CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
        }
    }
}

TEST_CASE("backward: zero output grad gives zero gradients") {
    const NetworkParams net = init_network({3, 6, 2}, 3);
    Rng rng = Rng::stream(13, 0);
    const Mat x = random_matrix(4, 3, rng);
    ForwardCache cache;
    forward(net, x, &cache);
    auto [grads, input_grad] = backward(net, cache, Mat::Zero(4, 2));
    for (const auto& w : grads.weights) CHECK(w.isZero());
    for (const auto& b : grads.biases) CHECK(b.isZero());
    CHECK(input_grad.isZero());
}

TEST_CASE("backward: single linear unit has d(out)/d(weight) = input") {
    NetworkParams net = init_network({1, 1}, 7);
    net.weights[0](0, 0) = 0.5;
    net.biases[0](0) = 0.25;
    Mat x(1, 1);
    x(0, 0) = 1.75;
    ForwardCache cache;
    forward(net, x, &cache);
    auto [grads, input_grad] = backward(net, cache, Mat::Ones(1, 1));
    CHECK(grads.weights[0](0, 0) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(grads.biases[0](0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(input_grad(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("backward matches central finite differences on random nets") {
    const GradCheckResult result = gradient_check(25, 2024);
    CHECK(result.max_rel_error <= 1e-5);
}

TEST_CASE("backward rejects stale caches") {
    NetworkParams net = init_network({2, 3, 1}, 0);
    Rng rng = Rng::stream(14, 0);
    const Mat x = random_matrix(2, 2, rng);
    ForwardCache cache;
    forward(net, x, &cache);
    NetGrads grads = zero_grads(net);
    grads.weights[0].setConstant(0.1);
    adam_step(net, grads, 1e-3); // mutates -> cache is stale
    CHECK_THROWS_AS(backward(net, cache, Mat::Ones(2, 1)), InvalidStateError);

    // A cache from one network cannot drive another's backward pass.
    const NetworkParams other = init_network({2, 3, 1}, 1);
    ForwardCache fresh;
    forward(net, x, &fresh);
    CHECK_THROWS_AS(backward(other, fresh, Mat::Ones(2, 1)),
                    InvalidStateError);
}

TEST_CASE("adam_step: first step moves a zero param to -lr") {
    NetworkParams net = init_network({1, 1}, 0);
    net.weights[0](0, 0) = 0.0;
    net.biases[0](0) = 0.0;
    NetGrads grads = zero_grads(net);
    grads.weights[0](0, 0) = 1.0;
    adam_step(net, grads, 3e-4);
    CHECK(std::abs(net.weights[0](0, 0) + 3e-4) < 1e-9);
    CHECK(net.adam_t == 1);
    CHECK(net.biases[0](0) == 0.0); // zero grad, zero state: unchanged
}

TEST_CASE("adam_step: equal gradients give equal updates") {
    NetworkParams net = init_network({1, 2}, 0);
    net.weights[0].setConstant(0.3);
    NetGrads grads = zero_grads(net);
    grads.weights[0].setConstant(0.7);
    adam_step(net, grads, 1e-3);
    CHECK(net.weights[0](0, 0) == net.weights[0](1, 0));
}

TEST_CASE("adam_step rejects non-finite gradients and leaves params alone") {
    NetworkParams net = init_network({2, 2}, 0);
    const NetworkParams before = net;
    NetGrads grads = zero_grads(net);
    grads.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(net, grads, 1e-3), NumericError);
    CHECK(params_equal(net, before));
    CHECK(net.adam_t == 0);
}

TEST_CASE("identical update sequences give bit-identical parameters") {
    auto run = [] {
        NetworkParams net = init_network({3, 8, 2}, 77);
        Rng rng = Rng::stream(15, 0);
        for (int step = 0; step < 5; ++step) {
            const Mat x = random_matrix(4, 3, rng);
            ForwardCache cache;
            const Mat out = forward(net, x, &cache);
            auto [grads, input_grad] =
                backward(net, cache, out - Mat::Ones(4, 2));
            adam_step(net, grads, 1e-3);
        }
        return net;
    };
    CHECK(params_equal(run(), run()));
}
