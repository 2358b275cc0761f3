#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dcam/tensor.hpp"

namespace dcam {

/// Corner-aligned bilinear interpolation of a single plane. Output pixel i
/// samples source position i*(S-1)/(T-1); a 1-pixel target samples the
/// source center. Identity when the sizes match.
std::vector<double> bilinear_resize_plane(std::span<const double> src, int src_h, int src_w,
                                          int dst_h, int dst_w);

/// Resizes a [C,H,W] image to [C,target,target].
Tensor resize_image(const Tensor& image, int target);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Per-channel mean and standard deviation over a set of [C,H,W] images.
ChannelStats compute_channel_stats(std::span<const Tensor> images);

/// (x - mean) / std per channel. Throws UsageError on non-positive std.
Tensor normalize(const Tensor& image, std::span<const double> mean,
                 std::span<const double> stddev);
void normalize_images(std::span<Tensor> images, std::span<const double> mean,
                      std::span<const double> stddev);

// 8-bit binary netpbm IO. Planes hold doubles in [0,1]; writing quantizes
// with round(v*255) after clamping, reading divides by the stated maxval.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // [0,1]
};

void write_pgm(const std::filesystem::path& path, std::span<const double> pixels, int height,
               int width);
GrayImage read_pgm(const std::filesystem::path& path);

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB
};

void write_ppm(const std::filesystem::path& path, const RgbImage& image);

}  // namespace dcam
