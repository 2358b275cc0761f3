#pragma once

#include <span>
#include <string>
#include <vector>

#include "dcam/image.hpp"
#include "dcam/synth.hpp"
#include "dcam/tensor.hpp"

namespace dcam {

/// Class activation map: the weighted sum of final feature maps using the
/// class's row of the classifier weights (bias excluded; a constant offset
/// cannot move the localization).
struct ActivationMap {
  std::string class_name;
  std::string image_id;
  int raw_h = 0, raw_w = 0;
  std::vector<double> raw;
  int up_h = 0, up_w = 0;
  std::vector<double> upscaled;  // empty until upscale()

  bool has_upscaled() const { return !upscaled.empty(); }
};

/// M[i,j] = sum_k weights[k] * feature_maps[k,i,j]; no normalization.
ActivationMap compute_cam(const Tensor& feature_maps, std::span<const double> class_weights_row,
                          const std::string& class_name);

/// Corner-aligned bilinear upscaling to the image dimensions.
/// Throws UsageError when the target is smaller than the raw map.
ActivationMap upscale(const ActivationMap& map, int height, int width);

/// Min-max normalizes the upscaled map (a constant map becomes all zeros)
/// and blends a red heat ramp over the grayscale image:
/// out = (1-alpha)*gray + alpha*heat.
RgbImage render_overlay(std::span<const double> gray, int height, int width,
                        const ActivationMap& map, double alpha);

/// Row/column of the map's maximum, first occurrence in row-major order.
struct MapArgmax {
  int row = 0;
  int col = 0;
};
MapArgmax upscaled_argmax(const ActivationMap& map);

/// Hit iff the upscaled map's argmax lies inside the inclusive box.
bool pointing_game(const ActivationMap& map, const MotifRegion& region);

}  // namespace dcam
