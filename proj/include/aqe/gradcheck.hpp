#pragma once

#include <cstdint>

#include "aqe/network.hpp"

namespace aqe {

/// Central finite-difference gradient of sum(forward(params, input) .* seed)
/// with respect to every parameter, using only the forward pass. The
/// analytic path never enters, so this is a genuinely independent reference.
NetGrads finite_difference_grads(const NetworkParams& params, const Mat& input,
                                 const Mat& output_grad, double step = 1e-6);

/// max over entries of |a - b| / max(|a|, |b|, floor).
double max_relative_error(const NetGrads& a, const NetGrads& b,
                          double floor = 1e-6);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int num_nets = 0;
    double seconds = 0.0;
};

/// Compares backward() against finite differences on `num_nets` random
/// networks (1-3 layers, widths up to 8, small random batches).
GradCheckResult gradient_check(int num_nets, std::uint64_t seed);

} // namespace aqe
