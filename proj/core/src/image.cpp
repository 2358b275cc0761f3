#include "dcam/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "dcam/error.hpp"

namespace dcam {

std::vector<double> bilinear_resize_plane(std::span<const double> src, int src_h, int src_w,
                                          int dst_h, int dst_w) {
  if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1) {
    throw UsageError("bilinear resize requires positive extents");
  }
  if (static_cast<std::size_t>(src_h) * static_cast<std::size_t>(src_w) != src.size()) {
    throw ShapeError("plane size " + std::to_string(src.size()) + " does not match " +
                     std::to_string(src_h) + "x" + std::to_string(src_w));
  }
  std::vector<double> dst(static_cast<std::size_t>(dst_h) * static_cast<std::size_t>(dst_w));

  auto source_pos = [](int i, int dst_n, int src_n) {
    if (dst_n == 1) return (static_cast<double>(src_n) - 1.0) / 2.0;
    return static_cast<double>(i) * (static_cast<double>(src_n) - 1.0) /
           (static_cast<double>(dst_n) - 1.0);
  };

  for (int i = 0; i < dst_h; ++i) {
    const double y = source_pos(i, dst_h, src_h);
    const int y0 = std::min(static_cast<int>(y), src_h - 1);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = y - static_cast<double>(y0);
    for (int j = 0; j < dst_w; ++j) {
      const double x = source_pos(j, dst_w, src_w);
      const int x0 = std::min(static_cast<int>(x), src_w - 1);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = src[static_cast<std::size_t>(y0 * src_w + x0)] * (1.0 - fx) +
                         src[static_cast<std::size_t>(y0 * src_w + x1)] * fx;
      const double bottom = src[static_cast<std::size_t>(y1 * src_w + x0)] * (1.0 - fx) +
                            src[static_cast<std::size_t>(y1 * src_w + x1)] * fx;
      dst[static_cast<std::size_t>(i * dst_w + j)] = top * (1.0 - fy) + bottom * fy;
    }
  }
  return dst;
}

Tensor resize_image(const Tensor& image, int target) {
  if (image.rank() != 3) {
    throw ShapeError("resize_image expects [C,H,W], got " + dims_to_string(image.dims()));
  }
  if (target < 1) throw UsageError("resize target must be positive");
  const std::int64_t channels = image.dim(0);
  const int height = static_cast<int>(image.dim(1));
  const int width = static_cast<int>(image.dim(2));
  if (height == target && width == target) return image.clone();

  Tensor out(Dims{channels, target, target});
  const std::int64_t src_plane = static_cast<std::int64_t>(height) * width;
  const std::int64_t dst_plane = static_cast<std::int64_t>(target) * target;
  for (std::int64_t c = 0; c < channels; ++c) {
    const std::span<const double> src(image.values().data() + c * src_plane,
                                      static_cast<std::size_t>(src_plane));
    const std::vector<double> plane = bilinear_resize_plane(src, height, width, target, target);
    std::copy(plane.begin(), plane.end(), out.values().data() + c * dst_plane);
  }
  return out;
}

ChannelStats compute_channel_stats(std::span<const Tensor> images) {
  if (images.empty()) throw UsageError("compute_channel_stats needs at least one image");
  const std::int64_t channels = images[0].dim(0);
  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> sum_sq(static_cast<std::size_t>(channels), 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(channels), 0);
  for (const Tensor& image : images) {
    if (image.rank() != 3 || image.dim(0) != channels) {
      throw ShapeError("inconsistent image shape " + dims_to_string(image.dims()));
    }
    const std::int64_t plane = image.dim(1) * image.dim(2);
    const double* p = image.values().data();
    for (std::int64_t c = 0; c < channels; ++c) {
      double s = 0.0, s2 = 0.0;
      const double* row = p + c * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        s += row[i];
        s2 += row[i] * row[i];
      }
      sum[static_cast<std::size_t>(c)] += s;
      sum_sq[static_cast<std::size_t>(c)] += s2;
      count[static_cast<std::size_t>(c)] += plane;
    }
  }
  ChannelStats stats;
  stats.mean.resize(static_cast<std::size_t>(channels));
  stats.stddev.resize(static_cast<std::size_t>(channels));
  for (std::int64_t c = 0; c < channels; ++c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    const double n = static_cast<double>(count[ci]);
    const double mean = sum[ci] / n;
    const double var = std::max(0.0, sum_sq[ci] / n - mean * mean);
    stats.mean[ci] = mean;
    stats.stddev[ci] = std::sqrt(var);
  }
  return stats;
}

Tensor normalize(const Tensor& image, std::span<const double> mean,
                 std::span<const double> stddev) {
  if (image.rank() != 3) {
    throw ShapeError("normalize expects [C,H,W], got " + dims_to_string(image.dims()));
  }
  const std::int64_t channels = image.dim(0);
  if (static_cast<std::int64_t>(mean.size()) != channels ||
      static_cast<std::int64_t>(stddev.size()) != channels) {
    throw ShapeError("normalize stats must have one entry per channel");
  }
  for (double s : stddev) {
    if (!(s > 0.0)) throw UsageError("normalize std must be positive");
  }
  Tensor out = image.clone();
  const std::int64_t plane = image.dim(1) * image.dim(2);
  double* p = out.values().data();
  for (std::int64_t c = 0; c < channels; ++c) {
    const double m = mean[static_cast<std::size_t>(c)];
    const double inv = 1.0 / stddev[static_cast<std::size_t>(c)];
    double* row = p + c * plane;
    for (std::int64_t i = 0; i < plane; ++i) row[i] = (row[i] - m) * inv;
  }
  return out;
}

void normalize_images(std::span<Tensor> images, std::span<const double> mean,
                      std::span<const double> stddev) {
  for (Tensor& image : images) image = normalize(image, mean, stddev);
}

namespace {

std::uint8_t quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

// Skips netpbm whitespace and '#' comments, then reads one token.
std::string next_token(std::istream& in, const std::string& source) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      token += static_cast<char>(c);
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c)) token += static_cast<char>(c);
  if (token.empty()) throw ParseError(source + ": unexpected end of header");
  return token;
}

int parse_pnm_int(std::istream& in, const std::string& source) {
  const std::string token = next_token(in, source);
  try {
    return std::stoi(token);
  } catch (const std::exception&) {
    throw ParseError(source + ": bad header token '" + token + "'");
  }
}

}  // namespace

void write_pgm(const std::filesystem::path& path, std::span<const double> pixels, int height,
               int width) {
  if (static_cast<std::size_t>(height) * static_cast<std::size_t>(width) != pixels.size()) {
    throw ShapeError("pixel count does not match " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<std::uint8_t> bytes(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) bytes[i] = quantize(pixels[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing: " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  const std::string source = path.filename().string();
  if (next_token(in, source) != "P5") throw ParseError(source + ": not a binary PGM (P5) file");
  const int width = parse_pnm_int(in, source);
  const int height = parse_pnm_int(in, source);
  const int maxval = parse_pnm_int(in, source);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw ParseError(source + ": unsupported PGM geometry or maxval");
  }
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw ParseError(source + ": truncated pixel data");
  }
  GrayImage image;
  image.height = height;
  image.width = width;
  image.pixels.resize(count);
  const double inv = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) image.pixels[i] = static_cast<double>(bytes[i]) * inv;
  return image;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  const std::size_t expect =
      3u * static_cast<std::size_t>(image.height) * static_cast<std::size_t>(image.width);
  if (image.pixels.size() != expect) {
    throw ShapeError("RGB pixel count does not match " + std::to_string(image.height) + "x" +
                     std::to_string(image.width));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("failed writing: " + path.string());
}

}  // namespace dcam
