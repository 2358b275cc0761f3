#include "dcam/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dcam/error.hpp"

namespace dcam {

namespace {

double checked_eval(const std::function<double()>& fn) {
  const double v = fn();
  if (!std::isfinite(v)) throw NumericError("gradient check objective is not finite");
  return v;
}

double check_coordinate(const std::function<double()>& fn, Tensor& param, std::int64_t index,
                        double h) {
  std::span<double> values = param.values();
  const double original = values[static_cast<std::size_t>(index)];
  const double step = h * std::max(1.0, std::abs(original));
  values[static_cast<std::size_t>(index)] = original + step;
  const double plus = checked_eval(fn);
  values[static_cast<std::size_t>(index)] = original - step;
  const double minus = checked_eval(fn);
  values[static_cast<std::size_t>(index)] = original;
  const double numeric = (plus - minus) / (2.0 * step);
  const double analytic = param.grad()[static_cast<std::size_t>(index)];
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double finite_diff_check(const std::function<double()>& fn, std::span<Tensor> params, double h) {
  if (h <= 0.0) throw UsageError("finite difference step must be positive");
  double worst = 0.0;
  for (Tensor& p : params) {
    for (std::int64_t i = 0; i < p.size(); ++i) {
      worst = std::max(worst, check_coordinate(fn, p, i, h));
    }
  }
  return worst;
}

double finite_diff_check_sampled(const std::function<double()>& fn, std::span<Tensor> params,
                                 double h, int coords_per_tensor, SplitMix64& rng) {
  if (h <= 0.0) throw UsageError("finite difference step must be positive");
  if (coords_per_tensor < 1) throw UsageError("coords_per_tensor must be positive");
  double worst = 0.0;
  for (Tensor& p : params) {
    const std::int64_t n = p.size();
    if (n <= coords_per_tensor) {
      for (std::int64_t i = 0; i < n; ++i) worst = std::max(worst, check_coordinate(fn, p, i, h));
      continue;
    }
    std::vector<std::int64_t> picked;
    picked.reserve(static_cast<std::size_t>(coords_per_tensor));
    while (static_cast<int>(picked.size()) < coords_per_tensor) {
      const std::int64_t i = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n)));
      if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
    }
    for (std::int64_t i : picked) worst = std::max(worst, check_coordinate(fn, p, i, h));
  }
  return worst;
}

}  // namespace dcam
