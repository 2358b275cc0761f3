#include "dcam/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

namespace {

struct ConvDims {
  std::int64_t batch, in_channels, height, width;
  std::int64_t out_channels, kernel_h, kernel_w;
  std::int64_t out_h, out_w;
  int stride, padding;
  std::int64_t patch_rows() const { return in_channels * kernel_h * kernel_w; }
  std::int64_t out_pixels() const { return out_h * out_w; }
  bool identity_layout() const {
    return kernel_h == 1 && kernel_w == 1 && stride == 1 && padding == 0;
  }
};

// Patch matrix for one sample: row (ci*Kh + kh)*Kw + kw holds, for every
// output position, the input value of channel ci at kernel offset (kh,kw).
// Out-of-image positions (padding) are zero.
void im2col(const double* x, const ConvDims& cd, double* col) {
  const std::int64_t plane = cd.height * cd.width;
  const std::int64_t pixels = cd.out_pixels();
  double* dst_row = col;
  for (std::int64_t ci = 0; ci < cd.in_channels; ++ci) {
    const double* x_plane = x + ci * plane;
    for (std::int64_t kh = 0; kh < cd.kernel_h; ++kh) {
      for (std::int64_t kw = 0; kw < cd.kernel_w; ++kw) {
        for (std::int64_t ho = 0; ho < cd.out_h; ++ho) {
          double* dst = dst_row + ho * cd.out_w;
          const std::int64_t hi = ho * cd.stride - cd.padding + kh;
          if (hi < 0 || hi >= cd.height) {
            std::fill(dst, dst + cd.out_w, 0.0);
            continue;
          }
          const double* src = x_plane + hi * cd.width;
          const std::int64_t wi0 = kw - cd.padding;
          if (cd.stride == 1) {
            const std::int64_t lo = std::max<std::int64_t>(0, -wi0);
            const std::int64_t hi2 = std::min<std::int64_t>(cd.out_w, cd.width - wi0);
            for (std::int64_t wo = 0; wo < lo; ++wo) dst[wo] = 0.0;
            if (hi2 > lo) std::memcpy(dst + lo, src + wi0 + lo, sizeof(double) * (hi2 - lo));
            for (std::int64_t wo = std::max(lo, hi2); wo < cd.out_w; ++wo) dst[wo] = 0.0;
          } else {
            for (std::int64_t wo = 0; wo < cd.out_w; ++wo) {
              const std::int64_t wi = wo * cd.stride + wi0;
              dst[wo] = (wi >= 0 && wi < cd.width) ? src[wi] : 0.0;
            }
          }
        }
        dst_row += pixels;
      }
    }
  }
}

// Transpose of im2col: scatter-adds a patch-matrix gradient back onto the
// input gradient of one sample.
void col2im_add(const double* col, const ConvDims& cd, double* dx) {
  const std::int64_t plane = cd.height * cd.width;
  const std::int64_t pixels = cd.out_pixels();
  const double* src_row = col;
  for (std::int64_t ci = 0; ci < cd.in_channels; ++ci) {
    double* dx_plane = dx + ci * plane;
    for (std::int64_t kh = 0; kh < cd.kernel_h; ++kh) {
      for (std::int64_t kw = 0; kw < cd.kernel_w; ++kw) {
        for (std::int64_t ho = 0; ho < cd.out_h; ++ho) {
          const std::int64_t hi = ho * cd.stride - cd.padding + kh;
          if (hi < 0 || hi >= cd.height) continue;
          const double* src = src_row + ho * cd.out_w;
          double* dst = dx_plane + hi * cd.width;
          const std::int64_t wi0 = kw - cd.padding;
          if (cd.stride == 1) {
            const std::int64_t lo = std::max<std::int64_t>(0, -wi0);
            const std::int64_t hi2 = std::min<std::int64_t>(cd.out_w, cd.width - wi0);
            for (std::int64_t wo = lo; wo < hi2; ++wo) dst[wi0 + wo] += src[wo];
          } else {
            for (std::int64_t wo = 0; wo < cd.out_w; ++wo) {
              const std::int64_t wi = wo * cd.stride + wi0;
              if (wi >= 0 && wi < cd.width) dst[wi] += src[wo];
            }
          }
        }
        src_row += pixels;
      }
    }
  }
}

bool grads_wanted(const ComputeGraph& g, std::initializer_list<const Tensor*> inputs) {
  if (!g.recording()) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(what) + " must be rank 4, got shape " +
                     dims_to_string(t.dims()));
  }
}

const double kSigmoidFloor = std::numeric_limits<double>::min();

double stable_sigmoid(double x) {
  double y;
  if (x >= 0.0) {
    const double e = std::exp(-x);
    y = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  // Pin the output into the open interval (0,1) even at extreme logits.
  const double ceiling = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  if (y < kSigmoidFloor) y = kSigmoidFloor;
  if (y > ceiling) y = ceiling;
  return y;
}

}  // namespace

Tensor conv2d(ComputeGraph& g, const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride, int padding) {
  require_rank4(input, "conv2d input");
  require_rank4(kernels, "conv2d kernels");
  if (stride < 1) throw UsageError("conv2d stride must be positive");
  if (padding < 0) throw UsageError("conv2d padding must be non-negative");

  ConvDims cd;
  cd.batch = input.dim(0);
  cd.in_channels = input.dim(1);
  cd.height = input.dim(2);
  cd.width = input.dim(3);
  cd.out_channels = kernels.dim(0);
  cd.kernel_h = kernels.dim(2);
  cd.kernel_w = kernels.dim(3);
  cd.stride = stride;
  cd.padding = padding;

  if (kernels.dim(1) != cd.in_channels) {
    throw ShapeError("conv2d channel mismatch: input " + dims_to_string(input.dims()) +
                     " vs kernels " + dims_to_string(kernels.dims()));
  }
  if (bias.dims() != Dims{cd.out_channels}) {
    throw ShapeError("conv2d bias must have shape [" + std::to_string(cd.out_channels) +
                     "], got " + dims_to_string(bias.dims()));
  }
  if (cd.height + 2 * padding < cd.kernel_h || cd.width + 2 * padding < cd.kernel_w) {
    throw ShapeError("conv2d kernel " + dims_to_string(kernels.dims()) +
                     " larger than padded input " + dims_to_string(input.dims()));
  }
  cd.out_h = (cd.height + 2 * padding - cd.kernel_h) / stride + 1;
  cd.out_w = (cd.width + 2 * padding - cd.kernel_w) / stride + 1;

  const bool wants_grad = grads_wanted(g, {&input, &kernels, &bias});
  Tensor out(Dims{cd.batch, cd.out_channels, cd.out_h, cd.out_w}, wants_grad);

  const std::int64_t patch_rows = cd.patch_rows();
  const std::int64_t pixels = cd.out_pixels();
  const std::int64_t in_sample = cd.in_channels * cd.height * cd.width;
  const std::int64_t out_sample = cd.out_channels * pixels;

  const double* x = input.values().data();
  const double* w = kernels.values().data();
  const double* b = bias.values().data();
  double* y = out.values().data();

  std::vector<double> col_buf;
  if (!cd.identity_layout()) col_buf.resize(static_cast<std::size_t>(patch_rows * pixels));

  for (std::int64_t n = 0; n < cd.batch; ++n) {
    const double* xs = x + n * in_sample;
    const double* col = xs;
    if (!cd.identity_layout()) {
      im2col(xs, cd, col_buf.data());
      col = col_buf.data();
    }
    for (std::int64_t co = 0; co < cd.out_channels; ++co) {
      double* o = y + n * out_sample + co * pixels;
      std::fill(o, o + pixels, b[co]);
      const double* wrow = w + co * patch_rows;
      for (std::int64_t k = 0; k < patch_rows; ++k) {
        const double a = wrow[k];
        const double* c = col + k * pixels;
        for (std::int64_t p = 0; p < pixels; ++p) o[p] += a * c[p];
      }
    }
  }

  if (wants_grad) {
    Tensor in_t = input, k_t = kernels, b_t = bias, out_t = out;
    g.record("conv2d", {in_t, k_t, b_t}, out_t, [in_t, k_t, b_t, out_t, cd]() mutable {
      const std::int64_t patch_rows = cd.patch_rows();
      const std::int64_t pixels = cd.out_pixels();
      const std::int64_t in_sample = cd.in_channels * cd.height * cd.width;
      const std::int64_t out_sample = cd.out_channels * pixels;
      const double* go = out_t.grad().data();
      const double* x = in_t.values().data();
      const double* w = k_t.values().data();

      if (b_t.requires_grad()) {
        std::span<double> db = b_t.grad();
        for (std::int64_t n = 0; n < cd.batch; ++n) {
          for (std::int64_t co = 0; co < cd.out_channels; ++co) {
            const double* gor = go + n * out_sample + co * pixels;
            double acc = 0.0;
            for (std::int64_t p = 0; p < pixels; ++p) acc += gor[p];
            db[static_cast<std::size_t>(co)] += acc;
          }
        }
      }

      const bool need_dw = k_t.requires_grad();
      const bool need_dx = in_t.requires_grad();
      if (!need_dw && !need_dx) return;

      std::vector<double> col_buf;
      if (!cd.identity_layout() && need_dw) {
        col_buf.resize(static_cast<std::size_t>(patch_rows * pixels));
      }
      std::vector<double> colgrad;
      if (need_dx) colgrad.resize(static_cast<std::size_t>(patch_rows * pixels));

      std::span<double> dw = need_dw ? k_t.grad() : std::span<double>{};
      std::span<double> dx = need_dx ? in_t.grad() : std::span<double>{};

      for (std::int64_t n = 0; n < cd.batch; ++n) {
        const double* gos = go + n * out_sample;
        if (need_dw) {
          const double* xs = x + n * in_sample;
          const double* col = xs;
          if (!cd.identity_layout()) {
            im2col(xs, cd, col_buf.data());
            col = col_buf.data();
          }
          for (std::int64_t co = 0; co < cd.out_channels; ++co) {
            const double* gor = gos + co * pixels;
            double* dwrow = dw.data() + co * patch_rows;
            for (std::int64_t k = 0; k < patch_rows; ++k) {
              const double* c = col + k * pixels;
              double acc = 0.0;
              for (std::int64_t p = 0; p < pixels; ++p) acc += gor[p] * c[p];
              dwrow[k] += acc;
            }
          }
        }
        if (need_dx) {
          std::fill(colgrad.begin(), colgrad.end(), 0.0);
          for (std::int64_t co = 0; co < cd.out_channels; ++co) {
            const double* gor = gos + co * pixels;
            const double* wrow = w + co * patch_rows;
            for (std::int64_t k = 0; k < patch_rows; ++k) {
              const double a = wrow[k];
              double* cg = colgrad.data() + k * pixels;
              for (std::int64_t p = 0; p < pixels; ++p) cg[p] += a * gor[p];
            }
          }
          double* dxs = dx.data() + n * in_sample;
          if (cd.identity_layout()) {
            for (std::int64_t i = 0; i < in_sample; ++i) dxs[i] += colgrad[static_cast<std::size_t>(i)];
          } else {
            col2im_add(colgrad.data(), cd, dxs);
          }
        }
      }
    });
  }
  return out;
}

Tensor batchnorm(ComputeGraph& g, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                 RunningStats& stats, NormMode mode, double momentum, double epsilon) {
  require_rank4(input, "batchnorm input");
  const std::int64_t batch = input.dim(0);
  const std::int64_t channels = input.dim(1);
  const std::int64_t height = input.dim(2);
  const std::int64_t width = input.dim(3);
  if (gamma.dims() != Dims{channels} || beta.dims() != Dims{channels}) {
    throw ShapeError("batchnorm gamma/beta must have shape [" + std::to_string(channels) +
                     "], got " + dims_to_string(gamma.dims()) + " and " +
                     dims_to_string(beta.dims()));
  }
  if (static_cast<std::int64_t>(stats.mean.size()) != channels ||
      static_cast<std::int64_t>(stats.var.size()) != channels) {
    throw ShapeError("batchnorm running stats sized for " + std::to_string(stats.mean.size()) +
                     " channels, input has " + std::to_string(channels));
  }
  if (epsilon < 0.0) throw UsageError("batchnorm epsilon must be non-negative");
  if (momentum < 0.0 || momentum > 1.0) throw UsageError("batchnorm momentum must be in [0,1]");
  if (mode == NormMode::Eval && !stats.populated()) {
    throw StateError("eval-mode batchnorm invoked before any running statistics were recorded");
  }

  const std::int64_t plane = height * width;
  const std::int64_t sample = channels * plane;
  const double m = static_cast<double>(batch * plane);

  std::vector<double> mean(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> var(static_cast<std::size_t>(channels), 0.0);
  const double* x = input.values().data();

  if (mode == NormMode::Train) {
    for (std::int64_t n = 0; n < batch; ++n) {
      for (std::int64_t c = 0; c < channels; ++c) {
        const double* row = x + n * sample + c * plane;
        double acc = 0.0;
        for (std::int64_t p = 0; p < plane; ++p) acc += row[p];
        mean[static_cast<std::size_t>(c)] += acc;
      }
    }
    for (std::int64_t c = 0; c < channels; ++c) mean[static_cast<std::size_t>(c)] /= m;
    for (std::int64_t n = 0; n < batch; ++n) {
      for (std::int64_t c = 0; c < channels; ++c) {
        const double* row = x + n * sample + c * plane;
        const double mu = mean[static_cast<std::size_t>(c)];
        double acc = 0.0;
        for (std::int64_t p = 0; p < plane; ++p) {
          const double d = row[p] - mu;
          acc += d * d;
        }
        var[static_cast<std::size_t>(c)] += acc;
      }
    }
    for (std::int64_t c = 0; c < channels; ++c) var[static_cast<std::size_t>(c)] /= m;
  } else {
    mean = stats.mean;
    var = stats.var;
  }

  std::vector<double> invstd(static_cast<std::size_t>(channels));
  for (std::int64_t c = 0; c < channels; ++c) {
    invstd[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + epsilon);
  }

  const bool wants_grad = grads_wanted(g, {&input, &gamma, &beta});
  Tensor out(input.dims(), wants_grad);
  double* y = out.values().data();
  const double* gam = gamma.values().data();
  const double* bet = beta.values().data();

  std::vector<double> xhat;
  if (wants_grad) xhat.resize(static_cast<std::size_t>(batch * sample));

  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::int64_t base = n * sample + c * plane;
      const double mu = mean[static_cast<std::size_t>(c)];
      const double is = invstd[static_cast<std::size_t>(c)];
      const double gc = gam[c];
      const double bc = bet[c];
      const double* row = x + base;
      double* orow = y + base;
      if (wants_grad) {
        double* xh = xhat.data() + base;
        for (std::int64_t p = 0; p < plane; ++p) {
          const double h = (row[p] - mu) * is;
          xh[p] = h;
          orow[p] = h * gc + bc;
        }
      } else {
        for (std::int64_t p = 0; p < plane; ++p) orow[p] = ((row[p] - mu) * is) * gc + bc;
      }
    }
  }

  if (mode == NormMode::Train) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::size_t ci = static_cast<std::size_t>(c);
      stats.mean[ci] = momentum * stats.mean[ci] + (1.0 - momentum) * mean[ci];
      stats.var[ci] = momentum * stats.var[ci] + (1.0 - momentum) * var[ci];
    }
    stats.batches += 1;
  }

  if (wants_grad) {
    Tensor in_t = input, g_t = gamma, b_t = beta, out_t = out;
    const bool coupled = (mode == NormMode::Train);
    g.record("batchnorm", {in_t, g_t, b_t}, out_t,
             [in_t, g_t, b_t, out_t, xhat = std::move(xhat), invstd = std::move(invstd), batch,
              channels, plane, sample, m, coupled]() mutable {
               const double* go = out_t.grad().data();
               std::vector<double> sum_dy(static_cast<std::size_t>(channels), 0.0);
               std::vector<double> sum_dy_xhat(static_cast<std::size_t>(channels), 0.0);
               for (std::int64_t n = 0; n < batch; ++n) {
                 for (std::int64_t c = 0; c < channels; ++c) {
                   const std::int64_t base = n * sample + c * plane;
                   const double* gor = go + base;
                   const double* xh = xhat.data() + base;
                   double s1 = 0.0, s2 = 0.0;
                   for (std::int64_t p = 0; p < plane; ++p) {
                     s1 += gor[p];
                     s2 += gor[p] * xh[p];
                   }
                   sum_dy[static_cast<std::size_t>(c)] += s1;
                   sum_dy_xhat[static_cast<std::size_t>(c)] += s2;
                 }
               }
               if (b_t.requires_grad()) b_t.add_to_grad(sum_dy);
               if (g_t.requires_grad()) g_t.add_to_grad(sum_dy_xhat);
               if (in_t.requires_grad()) {
                 std::span<double> dx = in_t.grad();
                 const double* gam = g_t.values().data();
                 for (std::int64_t n = 0; n < batch; ++n) {
                   for (std::int64_t c = 0; c < channels; ++c) {
                     const std::int64_t base = n * sample + c * plane;
                     const double* gor = go + base;
                     const double* xh = xhat.data() + base;
                     double* dxr = dx.data() + base;
                     const double scale = gam[c] * invstd[static_cast<std::size_t>(c)];
                     if (coupled) {
                       const double sdy = sum_dy[static_cast<std::size_t>(c)];
                       const double sdyx = sum_dy_xhat[static_cast<std::size_t>(c)];
                       for (std::int64_t p = 0; p < plane; ++p) {
                         dxr[p] += (scale / m) * (m * gor[p] - sdy - xh[p] * sdyx);
                       }
                     } else {
                       for (std::int64_t p = 0; p < plane; ++p) dxr[p] += scale * gor[p];
                     }
                   }
                 }
               }
             });
  }
  return out;
}

Tensor activation(ComputeGraph& g, const Tensor& input, Activation kind) {
  return kind == Activation::Relu ? relu(g, input) : sigmoid(g, input);
}

Tensor relu(ComputeGraph& g, const Tensor& input) {
  const bool wants_grad = grads_wanted(g, {&input});
  Tensor out(input.dims(), wants_grad);
  const std::span<const double> x = input.values();
  std::span<double> y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    g.record("relu", {in_t}, out_t, [in_t, out_t]() mutable {
      const std::span<const double> go = out_t.grad();
      const std::span<const double> x = in_t.values();
      std::span<double> dx = in_t.grad();
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) dx[i] += go[i];
      }
    });
  }
  return out;
}

Tensor sigmoid(ComputeGraph& g, const Tensor& input) {
  const bool wants_grad = grads_wanted(g, {&input});
  Tensor out(input.dims(), wants_grad);
  const std::span<const double> x = input.values();
  std::span<double> y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = stable_sigmoid(x[i]);
  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    g.record("sigmoid", {in_t}, out_t, [in_t, out_t]() mutable {
      const std::span<const double> go = out_t.grad();
      const std::span<const double> y = out_t.values();
      std::span<double> dx = in_t.grad();
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += go[i] * y[i] * (1.0 - y[i]);
    });
  }
  return out;
}

Tensor avg_pool2d(ComputeGraph& g, const Tensor& input, int window, int stride) {
  require_rank4(input, "avg_pool2d input");
  if (window < 1) throw UsageError("avg_pool2d window must be positive");
  if (stride < 1) throw UsageError("avg_pool2d stride must be positive");
  const std::int64_t batch = input.dim(0);
  const std::int64_t channels = input.dim(1);
  const std::int64_t height = input.dim(2);
  const std::int64_t width = input.dim(3);
  if (height < window || width < window) {
    throw ShapeError("avg_pool2d window " + std::to_string(window) +
                     " exceeds spatial extent of " + dims_to_string(input.dims()));
  }
  const std::int64_t out_h = (height - window) / stride + 1;
  const std::int64_t out_w = (width - window) / stride + 1;
  const double inv = 1.0 / (static_cast<double>(window) * window);

  const bool wants_grad = grads_wanted(g, {&input});
  Tensor out(Dims{batch, channels, out_h, out_w}, wants_grad);
  const double* x = input.values().data();
  double* y = out.values().data();
  const std::int64_t planes = batch * channels;
  for (std::int64_t pc = 0; pc < planes; ++pc) {
    const double* xp = x + pc * height * width;
    double* yp = y + pc * out_h * out_w;
    for (std::int64_t ho = 0; ho < out_h; ++ho) {
      for (std::int64_t wo = 0; wo < out_w; ++wo) {
        double acc = 0.0;
        for (std::int64_t kh = 0; kh < window; ++kh) {
          const double* row = xp + (ho * stride + kh) * width + wo * stride;
          for (std::int64_t kw = 0; kw < window; ++kw) acc += row[kw];
        }
        yp[ho * out_w + wo] = acc * inv;
      }
    }
  }

  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    g.record("avg_pool2d", {in_t}, out_t,
             [in_t, out_t, planes, height, width, out_h, out_w, window, stride, inv]() mutable {
               const double* go = out_t.grad().data();
               double* dx = in_t.grad().data();
               for (std::int64_t pc = 0; pc < planes; ++pc) {
                 const double* gp = go + pc * out_h * out_w;
                 double* dxp = dx + pc * height * width;
                 for (std::int64_t ho = 0; ho < out_h; ++ho) {
                   for (std::int64_t wo = 0; wo < out_w; ++wo) {
                     const double v = gp[ho * out_w + wo] * inv;
                     for (std::int64_t kh = 0; kh < window; ++kh) {
                       double* row = dxp + (ho * stride + kh) * width + wo * stride;
                       for (std::int64_t kw = 0; kw < window; ++kw) row[kw] += v;
                     }
                   }
                 }
               }
             });
  }
  return out;
}

Tensor global_avg_pool(ComputeGraph& g, const Tensor& input) {
  require_rank4(input, "global_avg_pool input");
  const std::int64_t batch = input.dim(0);
  const std::int64_t channels = input.dim(1);
  const std::int64_t plane = input.dim(2) * input.dim(3);
  if (plane < 1) throw ShapeError("global_avg_pool requires non-empty spatial dims, got " +
                                  dims_to_string(input.dims()));
  const double inv = 1.0 / static_cast<double>(plane);

  const bool wants_grad = grads_wanted(g, {&input});
  Tensor out(Dims{batch, channels}, wants_grad);
  const double* x = input.values().data();
  double* y = out.values().data();
  for (std::int64_t i = 0; i < batch * channels; ++i) {
    const double* row = x + i * plane;
    double acc = 0.0;
    for (std::int64_t p = 0; p < plane; ++p) acc += row[p];
    y[i] = acc * inv;
  }

  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    g.record("global_avg_pool", {in_t}, out_t, [in_t, out_t, batch, channels, plane, inv]() mutable {
      const double* go = out_t.grad().data();
      double* dx = in_t.grad().data();
      for (std::int64_t i = 0; i < batch * channels; ++i) {
        const double v = go[i] * inv;
        double* row = dx + i * plane;
        for (std::int64_t p = 0; p < plane; ++p) row[p] += v;
      }
    });
  }
  return out;
}

Tensor concat_channels(ComputeGraph& g, const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels lhs");
  require_rank4(b, "concat_channels rhs");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels batch/spatial mismatch: " + dims_to_string(a.dims()) +
                     " vs " + dims_to_string(b.dims()));
  }
  const std::int64_t batch = a.dim(0);
  const std::int64_t ca = a.dim(1);
  const std::int64_t cb = b.dim(1);
  const std::int64_t plane = a.dim(2) * a.dim(3);
  const std::int64_t sa = ca * plane;
  const std::int64_t sb = cb * plane;

  const bool wants_grad = grads_wanted(g, {&a, &b});
  Tensor out(Dims{batch, ca + cb, a.dim(2), a.dim(3)}, wants_grad);
  const double* xa = a.values().data();
  const double* xb = b.values().data();
  double* y = out.values().data();
  for (std::int64_t n = 0; n < batch; ++n) {
    if (sa > 0) std::memcpy(y + n * (sa + sb), xa + n * sa, sizeof(double) * sa);
    if (sb > 0) std::memcpy(y + n * (sa + sb) + sa, xb + n * sb, sizeof(double) * sb);
  }

  if (wants_grad) {
    Tensor a_t = a, b_t = b, out_t = out;
    g.record("concat_channels", {a_t, b_t}, out_t, [a_t, b_t, out_t, batch, sa, sb]() mutable {
      const double* go = out_t.grad().data();
      if (a_t.requires_grad() && sa > 0) {
        double* da = a_t.grad().data();
        for (std::int64_t n = 0; n < batch; ++n) {
          const double* src = go + n * (sa + sb);
          double* dst = da + n * sa;
          for (std::int64_t i = 0; i < sa; ++i) dst[i] += src[i];
        }
      }
      if (b_t.requires_grad() && sb > 0) {
        double* db = b_t.grad().data();
        for (std::int64_t n = 0; n < batch; ++n) {
          const double* src = go + n * (sa + sb) + sa;
          double* dst = db + n * sb;
          for (std::int64_t i = 0; i < sb; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

Tensor slice_channels(ComputeGraph& g, const Tensor& input, std::int64_t begin, std::int64_t end) {
  require_rank4(input, "slice_channels input");
  const std::int64_t channels = input.dim(1);
  if (begin < 0 || end < begin || end > channels) {
    throw UsageError("slice_channels range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for " + std::to_string(channels) +
                     " channels");
  }
  const std::int64_t batch = input.dim(0);
  const std::int64_t plane = input.dim(2) * input.dim(3);
  const std::int64_t cs = end - begin;
  const std::int64_t in_sample = channels * plane;
  const std::int64_t out_sample = cs * plane;

  const bool wants_grad = grads_wanted(g, {&input});
  Tensor out(Dims{batch, cs, input.dim(2), input.dim(3)}, wants_grad);
  const double* x = input.values().data();
  double* y = out.values().data();
  for (std::int64_t n = 0; n < batch; ++n) {
    if (out_sample > 0) {
      std::memcpy(y + n * out_sample, x + n * in_sample + begin * plane,
                  sizeof(double) * out_sample);
    }
  }

  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    g.record("slice_channels", {in_t}, out_t,
             [in_t, out_t, batch, plane, begin, in_sample, out_sample]() mutable {
               const double* go = out_t.grad().data();
               double* dx = in_t.grad().data();
               for (std::int64_t n = 0; n < batch; ++n) {
                 const double* src = go + n * out_sample;
                 double* dst = dx + n * in_sample + begin * plane;
                 for (std::int64_t i = 0; i < out_sample; ++i) dst[i] += src[i];
               }
             });
  }
  return out;
}

Tensor linear(ComputeGraph& g, const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2 || weights.rank() != 2) {
    throw ShapeError("linear expects input [B,F] and weights [K,F], got " +
                     dims_to_string(input.dims()) + " and " + dims_to_string(weights.dims()));
  }
  const std::int64_t batch = input.dim(0);
  const std::int64_t features = input.dim(1);
  const std::int64_t classes = weights.dim(0);
  if (weights.dim(1) != features) {
    throw ShapeError("linear feature mismatch: input " + dims_to_string(input.dims()) +
                     " vs weights " + dims_to_string(weights.dims()));
  }
  if (bias.dims() != Dims{classes}) {
    throw ShapeError("linear bias must have shape [" + std::to_string(classes) + "], got " +
                     dims_to_string(bias.dims()));
  }

  const bool wants_grad = grads_wanted(g, {&input, &weights, &bias});
  Tensor out(Dims{batch, classes}, wants_grad);
  const double* x = input.values().data();
  const double* w = weights.values().data();
  const double* b = bias.values().data();
  double* y = out.values().data();
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* xr = x + n * features;
    double* yr = y + n * classes;
    for (std::int64_t k = 0; k < classes; ++k) {
      const double* wr = w + k * features;
      double acc = b[k];
      for (std::int64_t f = 0; f < features; ++f) acc += xr[f] * wr[f];
      yr[k] = acc;
    }
  }

  if (wants_grad) {
    Tensor in_t = input, w_t = weights, b_t = bias, out_t = out;
    g.record("linear", {in_t, w_t, b_t}, out_t, [in_t, w_t, b_t, out_t, batch, features,
                                                 classes]() mutable {
      const double* go = out_t.grad().data();
      if (b_t.requires_grad()) {
        std::span<double> db = b_t.grad();
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t k = 0; k < classes; ++k) db[static_cast<std::size_t>(k)] += go[n * classes + k];
        }
      }
      if (w_t.requires_grad()) {
        double* dw = w_t.grad().data();
        const double* x = in_t.values().data();
        for (std::int64_t n = 0; n < batch; ++n) {
          const double* xr = x + n * features;
          const double* gor = go + n * classes;
          for (std::int64_t k = 0; k < classes; ++k) {
            const double v = gor[k];
            double* dwr = dw + k * features;
            for (std::int64_t f = 0; f < features; ++f) dwr[f] += v * xr[f];
          }
        }
      }
      if (in_t.requires_grad()) {
        double* dx = in_t.grad().data();
        const double* w = w_t.values().data();
        for (std::int64_t n = 0; n < batch; ++n) {
          double* dxr = dx + n * features;
          const double* gor = go + n * classes;
          for (std::int64_t k = 0; k < classes; ++k) {
            const double v = gor[k];
            const double* wr = w + k * features;
            for (std::int64_t f = 0; f < features; ++f) dxr[f] += v * wr[f];
          }
        }
      }
    });
  }
  return out;
}

Tensor sum_all(ComputeGraph& g, const Tensor& input) {
  const bool wants_grad = grads_wanted(g, {&input});
  double acc = 0.0;
  for (double v : input.values()) acc += v;
  Tensor out(Dims{1}, std::vector<double>{acc}, wants_grad);
  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    g.record("sum_all", {in_t}, out_t, [in_t, out_t]() mutable {
      const double v = out_t.grad()[0];
      std::span<double> dx = in_t.grad();
      for (double& d : dx) d += v;
    });
  }
  return out;
}

Tensor weighted_sum(ComputeGraph& g, const Tensor& input, std::span<const double> coeffs) {
  if (static_cast<std::int64_t>(coeffs.size()) != input.size()) {
    throw ShapeError("weighted_sum coefficient count " + std::to_string(coeffs.size()) +
                     " does not match tensor size " + std::to_string(input.size()));
  }
  const bool wants_grad = grads_wanted(g, {&input});
  const std::span<const double> x = input.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += coeffs[i] * x[i];
  Tensor out(Dims{1}, std::vector<double>{acc}, wants_grad);
  if (wants_grad) {
    Tensor in_t = input, out_t = out;
    std::vector<double> c(coeffs.begin(), coeffs.end());
    g.record("weighted_sum", {in_t}, out_t, [in_t, out_t, c = std::move(c)]() mutable {
      const double v = out_t.grad()[0];
      std::span<double> dx = in_t.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += v * c[i];
    });
  }
  return out;
}

}  // namespace dcam
