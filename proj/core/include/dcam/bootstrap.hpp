#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dcam {

struct BootstrapResult {
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  bool significant = false;  // paired difference only: 0 outside [ci_low, ci_high]
};

/// A statistic evaluated on a (multi)set of image indices.
using Statistic = std::function<double(std::span<const std::int32_t>)>;

/// The resample-index stream is a pure function of (seed, resample_index):
/// stream i draws n_images indices from SplitMix64(derive_seed(seed,
/// "bootstrap", i)), so paired statistics and parallel evaluation see
/// identical resamples by construction.
std::vector<std::int32_t> bootstrap_resample_indices(std::uint64_t seed, int resample_index,
                                                     std::int32_t n_images);

/// Linear-interpolation percentile of a sorted sample:
/// h = (n-1)*pct/100; value = x[floor(h)] + frac(h)*(x[floor(h)+1]-x[floor(h)]).
double percentile_of_sorted(std::span<const double> sorted_values, double pct);

/// Percentile-method bootstrap: n_samples resamples with replacement, the
/// 2.5th/97.5th percentiles as the 95% CI, the statistic on the original
/// set as the point estimate. Throws NumericError (naming the resample)
/// when the statistic returns a non-finite value.
BootstrapResult bootstrap_ci(const Statistic& statistic, std::int32_t n_images, int n_samples,
                             std::uint64_t seed);

/// Bootstrap CI of a - b over one shared resample stream; `significant`
/// reports whether the CI excludes zero.
BootstrapResult paired_difference_ci(const Statistic& stat_a, const Statistic& stat_b,
                                     std::int32_t n_images, int n_samples, std::uint64_t seed);

}  // namespace dcam
