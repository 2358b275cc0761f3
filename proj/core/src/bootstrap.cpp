#include "dcam/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcam/error.hpp"
#include "dcam/rng.hpp"

namespace dcam {

std::vector<std::int32_t> bootstrap_resample_indices(std::uint64_t seed, int resample_index,
                                                     std::int32_t n_images) {
  SplitMix64 rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(resample_index)));
  std::vector<std::int32_t> indices(static_cast<std::size_t>(n_images));
  for (std::int32_t& i : indices) {
    i = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(n_images)));
  }
  return indices;
}

double percentile_of_sorted(std::span<const double> sorted_values, double pct) {
  if (sorted_values.empty()) throw UsageError("percentile of an empty sample");
  if (pct < 0.0 || pct > 100.0) throw UsageError("percentile must lie in [0,100]");
  const double h = (static_cast<double>(sorted_values.size()) - 1.0) * pct / 100.0;
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted_values.size()) return sorted_values.back();
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

namespace {

double checked_statistic(const Statistic& statistic, std::span<const std::int32_t> indices,
                         int resample_index) {
  const double v = statistic(indices);
  if (!std::isfinite(v)) {
    throw NumericError("statistic returned a non-finite value on resample " +
                       std::to_string(resample_index));
  }
  return v;
}

BootstrapResult run_bootstrap(const std::function<double(std::span<const std::int32_t>, int)>& eval,
                              std::int32_t n_images, int n_samples, std::uint64_t seed) {
  if (n_images < 1) throw UsageError("bootstrap needs a non-empty image set");
  if (n_samples < 1) throw UsageError("bootstrap needs n_samples >= 1");

  std::vector<std::int32_t> original(static_cast<std::size_t>(n_images));
  for (std::int32_t i = 0; i < n_images; ++i) original[static_cast<std::size_t>(i)] = i;

  BootstrapResult result;
  result.n_samples = n_samples;
  result.seed = seed;
  result.point_estimate = eval(original, -1);

  std::vector<double> samples(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    const std::vector<std::int32_t> indices = bootstrap_resample_indices(seed, s, n_images);
    samples[static_cast<std::size_t>(s)] = eval(indices, s);
  }
  std::sort(samples.begin(), samples.end());
  result.ci_low = percentile_of_sorted(samples, 2.5);
  result.ci_high = percentile_of_sorted(samples, 97.5);
  return result;
}

}  // namespace

BootstrapResult bootstrap_ci(const Statistic& statistic, std::int32_t n_images, int n_samples,
                             std::uint64_t seed) {
  return run_bootstrap(
      [&](std::span<const std::int32_t> indices, int resample) {
        return checked_statistic(statistic, indices, resample);
      },
      n_images, n_samples, seed);
}

BootstrapResult paired_difference_ci(const Statistic& stat_a, const Statistic& stat_b,
                                     std::int32_t n_images, int n_samples, std::uint64_t seed) {
  BootstrapResult result = run_bootstrap(
      [&](std::span<const std::int32_t> indices, int resample) {
        return checked_statistic(stat_a, indices, resample) -
               checked_statistic(stat_b, indices, resample);
      },
      n_images, n_samples, seed);
  result.significant = (result.ci_low > 0.0 || result.ci_high < 0.0);
  return result;
}

}  // namespace dcam
