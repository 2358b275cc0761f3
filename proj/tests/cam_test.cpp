#include <gtest/gtest.h>

#include <cmath>

#include "dcam/cam.hpp"
#include "dcam/error.hpp"
#include "test_util.hpp"

using namespace dcam;
using dcam::testing::random_tensor;

TEST(ComputeCam, IdentityAndWeightedSum) {
  Tensor single(Dims{1, 2, 2}, {1, 2, 3, 4});
  const std::vector<double> one{1.0};
  const ActivationMap id = compute_cam(single, one, "Pneumonia");
  EXPECT_EQ(id.raw, (std::vector<double>{1, 2, 3, 4}));

  Tensor maps(Dims{2, 2, 2}, {1, 0, 0, 1, 0, 2, 2, 0});
  const std::vector<double> w{1.0, 0.5};
  const ActivationMap m = compute_cam(maps, w, "Pneumonia");
  EXPECT_EQ(m.raw, (std::vector<double>{1, 1, 1, 1}));

  const std::vector<double> zeros{0.0, 0.0};
  const ActivationMap z = compute_cam(maps, zeros, "Pneumonia");
  for (double v : z.raw) EXPECT_DOUBLE_EQ(v, 0.0);

  const std::vector<double> wrong{1.0, 2.0, 3.0};
  EXPECT_THROW(compute_cam(maps, wrong, "Pneumonia"), ShapeError);
}

TEST(ComputeCam, LinearityInWeights) {
  SplitMix64 rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t k = rng.next_int(1, 6);
    Tensor maps = random_tensor(Dims{k, 4, 3}, rng, false);
    std::vector<double> w1(static_cast<std::size_t>(k)), w2(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < w1.size(); ++i) {
      w1[i] = rng.next_uniform(-1, 1);
      w2[i] = rng.next_uniform(-1, 1);
    }
    const double a = rng.next_uniform(-2, 2);
    const double b = rng.next_uniform(-2, 2);
    std::vector<double> combined(w1.size());
    for (std::size_t i = 0; i < w1.size(); ++i) combined[i] = a * w1[i] + b * w2[i];

    const ActivationMap lhs = compute_cam(maps, combined, "c");
    const ActivationMap m1 = compute_cam(maps, w1, "c");
    const ActivationMap m2 = compute_cam(maps, w2, "c");
    for (std::size_t i = 0; i < lhs.raw.size(); ++i) {
      EXPECT_NEAR(lhs.raw[i], a * m1.raw[i] + b * m2.raw[i], 1e-12);
    }
  }
}

TEST(ComputeCam, MatchesBruteForceLoop) {
  SplitMix64 rng(62);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int64_t k = rng.next_int(1, 8);
    const std::int64_t h = rng.next_int(1, 16);
    const std::int64_t w = rng.next_int(1, 16);
    Tensor maps = random_tensor(Dims{k, h, w}, rng, false);
    std::vector<double> weights(static_cast<std::size_t>(k));
    for (double& v : weights) v = rng.next_uniform(-1, 1);

    const ActivationMap fast = compute_cam(maps, weights, "c");
    for (std::int64_t i = 0; i < h; ++i) {
      for (std::int64_t j = 0; j < w; ++j) {
        double acc = 0.0;
        for (std::int64_t c = 0; c < k; ++c) acc += weights[static_cast<std::size_t>(c)] * maps.at({c, i, j});
        EXPECT_NEAR(fast.raw[static_cast<std::size_t>(i * w + j)], acc, 1e-12);
      }
    }
  }
}

TEST(Upscale, IdentityAndConstant) {
  Tensor maps(Dims{1, 2, 2}, {1, 2, 3, 4});
  const std::vector<double> one{1.0};
  ActivationMap raw = compute_cam(maps, one, "c");
  const ActivationMap same = upscale(raw, 2, 2);
  EXPECT_EQ(same.upscaled, raw.raw);

  Tensor constant = Tensor::full(Dims{1, 2, 2}, 3.5);
  ActivationMap craw = compute_cam(constant, one, "c");
  const ActivationMap up = upscale(craw, 7, 9);
  for (double v : up.upscaled) EXPECT_NEAR(v, 3.5, 1e-12);

  EXPECT_THROW(upscale(raw, 1, 4), UsageError);
}

TEST(Upscale, CornerAlignedRows) {
  Tensor maps(Dims{1, 2, 2}, {0, 1, 0, 1});
  const std::vector<double> one{1.0};
  ActivationMap raw = compute_cam(maps, one, "c");
  const ActivationMap up = upscale(raw, 2, 4);
  const std::vector<double> expected{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0,
                                     0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  ASSERT_EQ(up.upscaled.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(up.upscaled[i], expected[i], 1e-12);
  }
}

TEST(Upscale, ArgmaxStaysWithinOneSourceCell) {
  SplitMix64 rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 4, w = 5;
    Tensor maps = random_tensor(Dims{1, h, w}, rng, false);
    const std::vector<double> one{1.0};
    ActivationMap raw = compute_cam(maps, one, "c");

    std::size_t best = 0;
    for (std::size_t i = 1; i < raw.raw.size(); ++i) {
      if (raw.raw[i] > raw.raw[best]) best = i;
    }
    const int raw_row = static_cast<int>(best) / w;
    const int raw_col = static_cast<int>(best) % w;

    const int H = 40, W = 50;
    const ActivationMap up = upscale(raw, H, W);
    const MapArgmax arg = upscaled_argmax(up);
    // Map the upscaled argmax back into source coordinates.
    const double sy = arg.row * (static_cast<double>(h) - 1.0) / (static_cast<double>(H) - 1.0);
    const double sx = arg.col * (static_cast<double>(w) - 1.0) / (static_cast<double>(W) - 1.0);
    EXPECT_LE(std::abs(sy - raw_row), 1.0);
    EXPECT_LE(std::abs(sx - raw_col), 1.0);
  }
}

TEST(Overlay, AlphaZeroReplicatesGray) {
  SplitMix64 rng(64);
  const int h = 3, w = 4;
  std::vector<double> gray(static_cast<std::size_t>(h * w));
  for (double& v : gray) v = rng.next_double();
  Tensor maps = random_tensor(Dims{1, 2, 2}, rng, false);
  const std::vector<double> one{1.0};
  const ActivationMap up = upscale(compute_cam(maps, one, "c"), h, w);

  const RgbImage out = render_overlay(gray, h, w, up, 0.0);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const std::uint8_t g = static_cast<std::uint8_t>(std::lround(gray[i] * 255.0));
    EXPECT_EQ(out.pixels[3 * i + 0], g);
    EXPECT_EQ(out.pixels[3 * i + 1], g);
    EXPECT_EQ(out.pixels[3 * i + 2], g);
  }
}

TEST(Overlay, ConstantMapAlphaOneIsBlack) {
  const int h = 2, w = 2;
  const std::vector<double> gray{0.2, 0.4, 0.6, 0.8};
  Tensor maps = Tensor::full(Dims{1, 2, 2}, 5.0);
  const std::vector<double> one{1.0};
  const ActivationMap up = upscale(compute_cam(maps, one, "c"), h, w);
  const RgbImage out = render_overlay(gray, h, w, up, 1.0);
  for (std::uint8_t v : out.pixels) EXPECT_EQ(v, 0);
}

TEST(Overlay, RedChannelPeaksAtMapMaximum) {
  const int h = 4, w = 4;
  const std::vector<double> gray(16, 0.5);
  Tensor maps(Dims{1, 4, 4});
  maps.set({0, 2, 1}, 10.0);
  const std::vector<double> one{1.0};
  const ActivationMap up = upscale(compute_cam(maps, one, "c"), h, w);
  const RgbImage out = render_overlay(gray, h, w, up, 1.0);
  const std::size_t peak = 3 * (2 * 4 + 1);
  for (std::size_t i = 0; i < 16; ++i) {
    if (3 * i == peak) continue;
    EXPECT_LT(out.pixels[3 * i], out.pixels[peak]);
  }
  EXPECT_EQ(out.pixels[peak], 255);
}

TEST(PointingGame, HitMissAndTieBreak) {
  Tensor maps(Dims{1, 4, 4});
  maps.set({0, 1, 2}, 3.0);
  const std::vector<double> one{1.0};
  ActivationMap up = upscale(compute_cam(maps, one, "c"), 4, 4);

  EXPECT_TRUE(pointing_game(up, MotifRegion{"", "", 1, 0, 3, 2}));   // box contains (x=2,y=1)
  EXPECT_FALSE(pointing_game(up, MotifRegion{"", "", 0, 2, 1, 3}));  // box elsewhere

  // Uniform map: row-major first occurrence puts the argmax at (0,0).
  Tensor flat = Tensor::full(Dims{1, 4, 4}, 1.0);
  ActivationMap uniform = upscale(compute_cam(flat, one, "c"), 4, 4);
  EXPECT_FALSE(pointing_game(uniform, MotifRegion{"", "", 1, 1, 3, 3}));
  EXPECT_TRUE(pointing_game(uniform, MotifRegion{"", "", 0, 0, 0, 0}));
}

TEST(PointingGame, InvariantUnderPositiveWeightRescaling) {
  SplitMix64 rng(65);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor maps = random_tensor(Dims{3, 5, 5}, rng, false);
    std::vector<double> w{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1),
                          rng.next_uniform(-1, 1)};
    std::vector<double> scaled(w);
    const double scale = rng.next_uniform(0.1, 7.0);
    for (double& v : scaled) v *= scale;

    const ActivationMap a = upscale(compute_cam(maps, w, "c"), 15, 15);
    const ActivationMap b = upscale(compute_cam(maps, scaled, "c"), 15, 15);
    const MotifRegion box{"", "", 3, 3, 9, 9};
    EXPECT_EQ(pointing_game(a, box), pointing_game(b, box));
    const MapArgmax aa = upscaled_argmax(a);
    const MapArgmax bb = upscaled_argmax(b);
    EXPECT_EQ(aa.row, bb.row);
    EXPECT_EQ(aa.col, bb.col);
  }
}
