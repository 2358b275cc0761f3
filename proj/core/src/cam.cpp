#include "dcam/cam.hpp"

#include <algorithm>
#include <cmath>

#include "dcam/error.hpp"

namespace dcam {

ActivationMap compute_cam(const Tensor& feature_maps, std::span<const double> class_weights_row,
                          const std::string& class_name) {
  if (feature_maps.rank() != 3) {
    throw ShapeError("compute_cam expects [K,h,w] feature maps, got " +
                     dims_to_string(feature_maps.dims()));
  }
  const std::int64_t k = feature_maps.dim(0);
  if (static_cast<std::int64_t>(class_weights_row.size()) != k) {
    throw ShapeError("compute_cam weight row has " + std::to_string(class_weights_row.size()) +
                     " entries for " + std::to_string(k) + " feature maps");
  }
  ActivationMap map;
  map.class_name = class_name;
  map.raw_h = static_cast<int>(feature_maps.dim(1));
  map.raw_w = static_cast<int>(feature_maps.dim(2));
  const std::int64_t plane = static_cast<std::int64_t>(map.raw_h) * map.raw_w;
  map.raw.assign(static_cast<std::size_t>(plane), 0.0);
  const double* f = feature_maps.values().data();
  for (std::int64_t c = 0; c < k; ++c) {
    const double w = class_weights_row[static_cast<std::size_t>(c)];
    const double* fc = f + c * plane;
    for (std::int64_t p = 0; p < plane; ++p) map.raw[static_cast<std::size_t>(p)] += w * fc[p];
  }
  return map;
}

ActivationMap upscale(const ActivationMap& map, int height, int width) {
  if (map.raw.empty()) throw UsageError("upscale needs a computed raw map");
  if (height < map.raw_h || width < map.raw_w) {
    throw UsageError("upscale target " + std::to_string(height) + "x" + std::to_string(width) +
                     " smaller than raw map " + std::to_string(map.raw_h) + "x" +
                     std::to_string(map.raw_w));
  }
  ActivationMap out = map;
  out.up_h = height;
  out.up_w = width;
  out.upscaled = bilinear_resize_plane(map.raw, map.raw_h, map.raw_w, height, width);
  return out;
}

RgbImage render_overlay(std::span<const double> gray, int height, int width,
                        const ActivationMap& map, double alpha) {
  if (!map.has_upscaled() || map.up_h != height || map.up_w != width) {
    throw ShapeError("overlay needs an upscaled map matching the " + std::to_string(height) +
                     "x" + std::to_string(width) + " image");
  }
  if (static_cast<std::size_t>(height) * static_cast<std::size_t>(width) != gray.size()) {
    throw ShapeError("grayscale pixel count does not match " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("overlay alpha must lie in [0,1]");

  const auto [lo_it, hi_it] = std::minmax_element(map.upscaled.begin(), map.upscaled.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;

  RgbImage out;
  out.height = height;
  out.width = width;
  out.pixels.resize(3 * gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const double g = std::clamp(gray[i], 0.0, 1.0) * 255.0;
    const double heat = range > 0.0 ? (map.upscaled[i] - lo) / range : 0.0;
    const double red = (1.0 - alpha) * g + alpha * heat * 255.0;
    const double other = (1.0 - alpha) * g;
    out.pixels[3 * i + 0] = static_cast<std::uint8_t>(std::lround(std::clamp(red, 0.0, 255.0)));
    out.pixels[3 * i + 1] = static_cast<std::uint8_t>(std::lround(std::clamp(other, 0.0, 255.0)));
    out.pixels[3 * i + 2] = static_cast<std::uint8_t>(std::lround(std::clamp(other, 0.0, 255.0)));
  }
  return out;
}

MapArgmax upscaled_argmax(const ActivationMap& map) {
  if (!map.has_upscaled()) throw UsageError("pointing game needs an upscaled map");
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.upscaled.size(); ++i) {
    if (map.upscaled[i] > map.upscaled[best]) best = i;  // first occurrence wins ties
  }
  MapArgmax arg;
  arg.row = static_cast<int>(best / static_cast<std::size_t>(map.up_w));
  arg.col = static_cast<int>(best % static_cast<std::size_t>(map.up_w));
  return arg;
}

bool pointing_game(const ActivationMap& map, const MotifRegion& region) {
  const MapArgmax arg = upscaled_argmax(map);
  return region.contains(arg.col, arg.row);
}

}  // namespace dcam
