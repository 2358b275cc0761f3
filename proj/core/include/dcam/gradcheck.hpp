#pragma once

#include <functional>
#include <span>

#include "dcam/rng.hpp"
#include "dcam/tensor.hpp"

namespace dcam {

/// Central-difference gradient check.
///
/// `fn` evaluates the scalar objective at the current parameter values; the
/// analytic gradients to compare against must already be accumulated on the
/// parameters. Each coordinate is perturbed by h * max(1, |theta_i|) and the
/// numeric derivative (fn(+) - fn(-)) / (2*step) is compared as
/// |analytic - numeric| / max(1, |numeric|). Returns the max over all
/// coordinates. Parameter values are restored exactly.
///
/// Throws NumericError when fn produces a non-finite value.
double finite_diff_check(const std::function<double()>& fn, std::span<Tensor> params, double h);

/// Same check restricted to at most `coords_per_tensor` randomly chosen
/// coordinates of each parameter, for models too large to sweep fully.
double finite_diff_check_sampled(const std::function<double()>& fn, std::span<Tensor> params,
                                 double h, int coords_per_tensor, SplitMix64& rng);

}  // namespace dcam
