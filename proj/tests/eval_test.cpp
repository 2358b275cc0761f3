#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dcam/bootstrap.hpp"
#include "dcam/error.hpp"
#include "dcam/metrics.hpp"
#include "dcam/report.hpp"
#include "test_util.hpp"

using namespace dcam;

TEST(F1, HandCountedCases) {
  const std::vector<int> perfect_pred{1, 0, 1};
  EXPECT_DOUBLE_EQ(f1(perfect_pred, perfect_pred).value, 1.0);

  const std::vector<int> pred{1, 1, 0, 0};
  const std::vector<int> truth{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(f1(pred, truth).value, 0.5);  // TP=1, FP=1, FN=1

  const std::vector<int> none{0, 0, 0};
  const std::vector<int> some{1, 0, 1};
  EXPECT_DOUBLE_EQ(f1(none, some).value, 0.0);

  const F1Result degenerate = f1(none, std::vector<int>{0, 0, 0});
  EXPECT_DOUBLE_EQ(degenerate.value, 1.0);
  EXPECT_TRUE(degenerate.degenerate);
}

TEST(F1, SymmetricUnderSwap) {
  SplitMix64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> a(20), b(20);
    for (std::size_t i = 0; i < 20; ++i) {
      a[i] = rng.next_bernoulli(0.4) ? 1 : 0;
      b[i] = rng.next_bernoulli(0.4) ? 1 : 0;
    }
    EXPECT_DOUBLE_EQ(f1(a, b).value, f1(b, a).value);
  }
}

TEST(MultiRater, TableOneAveragingPath) {
  const std::vector<double> table_one{0.383, 0.356, 0.365, 0.442};
  const double average = mean_of(table_one);
  EXPECT_EQ(format_fixed(average, 3), "0.387");
}

TEST(MultiRater, IdenticalRatersScoreOne) {
  RaterMatrix m;
  m.rater_names = {"r1", "r2", "r3"};
  for (int i = 0; i < 10; ++i) {
    const int v = i % 3 == 0 ? 1 : 0;
    m.labels.push_back({v, v, v});
  }
  const MultiRaterF1 result = multi_rater_f1(m);
  for (double v : result.mean_f1) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_DOUBLE_EQ(result.radiologist_average, 1.0);
}

TEST(MultiRater, TwoRatersReduceToPairwiseF1) {
  SplitMix64 rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    RaterMatrix m;
    m.rater_names = {"a", "b"};
    std::vector<int> a(20), b(20);
    for (std::size_t i = 0; i < 20; ++i) {
      a[i] = rng.next_bernoulli(0.5) ? 1 : 0;
      b[i] = rng.next_bernoulli(0.5) ? 1 : 0;
      m.labels.push_back({a[i], b[i]});
    }
    const MultiRaterF1 result = multi_rater_f1(m);
    EXPECT_DOUBLE_EQ(result.mean_f1[0], f1(a, b).value);
    EXPECT_DOUBLE_EQ(result.mean_f1[1], f1(b, a).value);
    EXPECT_DOUBLE_EQ(result.mean_f1[0], result.mean_f1[1]);
  }
}

TEST(MultiRater, MatchesNestedLoopOracle) {
  SplitMix64 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    RaterMatrix m;
    m.rater_names = {"r1", "r2", "r3", "r4", "model"};
    m.model_index = 4;
    const int n = 25;
    for (int i = 0; i < n; ++i) {
      std::vector<int> row(5);
      for (auto& v : row) v = rng.next_bernoulli(0.35) ? 1 : 0;
      m.labels.push_back(row);
    }
    const MultiRaterF1 result = multi_rater_f1(m);

    for (std::size_t r = 0; r < 5; ++r) {
      double total = 0.0;
      for (std::size_t s = 0; s < 5; ++s) {
        if (s == r) continue;
        std::vector<int> pred(n), truth(n);
        for (int i = 0; i < n; ++i) {
          pred[static_cast<std::size_t>(i)] = m.labels[static_cast<std::size_t>(i)][r];
          truth[static_cast<std::size_t>(i)] = m.labels[static_cast<std::size_t>(i)][s];
        }
        total += f1(pred, truth).value;
      }
      EXPECT_NEAR(result.mean_f1[r], total / 4.0, 1e-12);
    }
    const double rad =
        (result.mean_f1[0] + result.mean_f1[1] + result.mean_f1[2] + result.mean_f1[3]) / 4.0;
    EXPECT_NEAR(result.radiologist_average, rad, 1e-12);
  }
}

TEST(Auroc, Oracles) {
  const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> labels{0, 0, 1, 1};
  EXPECT_NEAR(auroc(scores, labels), 0.75, 1e-12);

  const std::vector<double> perfect{0.1, 0.2, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(auroc(perfect, labels), 1.0);

  const std::vector<double> ties{0.5, 0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(auroc(ties, labels), 0.5);

  const std::vector<int> single{1, 1, 1, 1};
  EXPECT_THROW(auroc(scores, single), UsageError);
}

namespace {

double brute_force_auroc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST(Auroc, MatchesPairCountingOracleWithTies) {
  SplitMix64 rng(74);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng.next_int(2, 50));
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // Coarse grid forces ties.
      scores[static_cast<std::size_t>(i)] = static_cast<double>(rng.next_int(0, 10)) / 10.0;
      labels[static_cast<std::size_t>(i)] = rng.next_bernoulli(0.5) ? 1 : 0;
      has_pos |= labels[static_cast<std::size_t>(i)] == 1;
      has_neg |= labels[static_cast<std::size_t>(i)] == 0;
    }
    if (!has_pos || !has_neg) continue;
    EXPECT_NEAR(auroc(scores, labels), brute_force_auroc(scores, labels), 1e-12);
  }
}

TEST(Auroc, InvariantUnderMonotoneTransform) {
  SplitMix64 rng(75);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = rng.next_uniform(-2, 2);
      labels[static_cast<std::size_t>(i)] = i % 3 == 0 ? 1 : 0;
    }
    std::vector<double> transformed(scores);
    for (double& v : transformed) v = std::exp(2.0 * v) + 1.0;
    EXPECT_NEAR(auroc(scores, labels), auroc(transformed, labels), 1e-12);
  }
}

TEST(Binarize, ThresholdRule) {
  const std::vector<double> p{0.5, 0.4999, 0.9, 0.1};
  const std::vector<int> labels = binarize(p, 0.5);
  EXPECT_EQ(labels, (std::vector<int>{1, 0, 1, 0}));
  EXPECT_THROW(binarize(p, 0.0), UsageError);
}

TEST(Binarize, ValidationOptimalThresholdOnSeparableSet) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const double threshold = best_f1_threshold(p, y);
  const std::vector<int> pred = binarize(p, threshold);
  EXPECT_DOUBLE_EQ(f1(pred, y).value, 1.0);
}

TEST(Bootstrap, SingleImageZeroWidth) {
  const Statistic count_stat = [](std::span<const std::int32_t> indices) {
    return static_cast<double>(indices.size());
  };
  const BootstrapResult result = bootstrap_ci(count_stat, 1, 100, 7);
  EXPECT_DOUBLE_EQ(result.ci_low, result.ci_high);
  EXPECT_DOUBLE_EQ(result.ci_low, result.point_estimate);
}

TEST(Bootstrap, DeterministicPerSeed) {
  SplitMix64 rng(76);
  std::vector<double> values(50);
  for (double& v : values) v = rng.next_double();
  const Statistic mean_stat = [&values](std::span<const std::int32_t> indices) {
    double s = 0.0;
    for (std::int32_t i : indices) s += values[static_cast<std::size_t>(i)];
    return s / static_cast<double>(indices.size());
  };
  const BootstrapResult a = bootstrap_ci(mean_stat, 50, 500, 11);
  const BootstrapResult b = bootstrap_ci(mean_stat, 50, 500, 11);
  EXPECT_EQ(a.point_estimate, b.point_estimate);
  EXPECT_EQ(a.ci_low, b.ci_low);
  EXPECT_EQ(a.ci_high, b.ci_high);
  const BootstrapResult c = bootstrap_ci(mean_stat, 50, 500, 12);
  EXPECT_NE(a.ci_low, c.ci_low);
}

TEST(Bootstrap, BalancedBinomialInterval) {
  // 200 images, half labeled 1: the resample mean is Binomial(200, 0.5)/200,
  // so the 95% CI sits near 0.5 +- 1.96*sqrt(0.25/200) ~ [0.43, 0.57].
  std::vector<double> labels(200);
  for (std::size_t i = 0; i < 200; ++i) labels[i] = i < 100 ? 1.0 : 0.0;
  const Statistic mean_stat = [&labels](std::span<const std::int32_t> indices) {
    double s = 0.0;
    for (std::int32_t i : indices) s += labels[static_cast<std::size_t>(i)];
    return s / static_cast<double>(indices.size());
  };
  const BootstrapResult result = bootstrap_ci(mean_stat, 200, 10000, 2024);
  EXPECT_DOUBLE_EQ(result.point_estimate, 0.5);
  EXPECT_NEAR(result.ci_low, 0.43, 0.015);
  EXPECT_NEAR(result.ci_high, 0.57, 0.015);
  EXPECT_LT(result.ci_low, 0.5);
  EXPECT_GT(result.ci_high, 0.5);
}

TEST(Bootstrap, NonFiniteStatisticNamesResample) {
  const Statistic bad = [](std::span<const std::int32_t> indices) {
    return indices[0] == 0 ? std::numeric_limits<double>::quiet_NaN() : 0.5;
  };
  try {
    bootstrap_ci(bad, 5, 200, 3);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("resample"), std::string::npos);
  }
}

TEST(Bootstrap, CoverageNearNominal) {
  // Scaled-down version of the acceptance run: Bernoulli(0.3) population,
  // percentile CI should cover theta for roughly 95% of trials.
  const int trials = 120;
  const int n_images = 200;
  const int resamples = 600;
  int covered = 0;
  for (int t = 0; t < trials; ++t) {
    SplitMix64 rng(derive_seed(909, "coverage", static_cast<std::uint64_t>(t)));
    std::vector<double> sample(n_images);
    for (double& v : sample) v = rng.next_bernoulli(0.3) ? 1.0 : 0.0;
    const Statistic mean_stat = [&sample](std::span<const std::int32_t> indices) {
      double s = 0.0;
      for (std::int32_t i : indices) s += sample[static_cast<std::size_t>(i)];
      return s / static_cast<double>(indices.size());
    };
    const BootstrapResult r =
        bootstrap_ci(mean_stat, n_images, resamples, static_cast<std::uint64_t>(t));
    if (r.ci_low <= 0.3 && 0.3 <= r.ci_high) ++covered;
  }
  const double coverage = static_cast<double>(covered) / trials;
  EXPECT_GT(coverage, 0.88);
  EXPECT_LE(coverage, 1.0);
}

TEST(PairedDifference, IdenticalStatisticsGiveExactZeros) {
  std::vector<double> evaluations_a, evaluations_b;
  const Statistic stat_a = [&](std::span<const std::int32_t> indices) {
    double s = 0.0;
    for (std::int32_t i : indices) s += static_cast<double>(i % 7) / 7.0;
    evaluations_a.push_back(s);
    return s;
  };
  const Statistic stat_b = [&](std::span<const std::int32_t> indices) {
    double s = 0.0;
    for (std::int32_t i : indices) s += static_cast<double>(i % 7) / 7.0;
    evaluations_b.push_back(s);
    return s;
  };
  const BootstrapResult result = paired_difference_ci(stat_a, stat_b, 40, 300, 5);
  EXPECT_DOUBLE_EQ(result.point_estimate, 0.0);
  EXPECT_DOUBLE_EQ(result.ci_low, 0.0);
  EXPECT_DOUBLE_EQ(result.ci_high, 0.0);
  EXPECT_FALSE(result.significant);

  // Shared resample streams: the two statistics saw identical index sets,
  // so every paired evaluation is exactly equal.
  ASSERT_EQ(evaluations_a.size(), evaluations_b.size());
  for (std::size_t i = 0; i < evaluations_a.size(); ++i) {
    EXPECT_EQ(evaluations_a[i], evaluations_b[i]);
  }
}

TEST(PairedDifference, StrictDominanceIsSignificant) {
  // Rater a agrees with the truth on every image; rater b never does.
  const int n = 60;
  std::vector<int> truth(n), a(n), b(n);
  for (int i = 0; i < n; ++i) {
    truth[static_cast<std::size_t>(i)] = i % 2;
    a[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)];
    b[static_cast<std::size_t>(i)] = 1 - truth[static_cast<std::size_t>(i)];
  }
  const Statistic stat_a = [&](std::span<const std::int32_t> indices) {
    int agree = 0;
    for (std::int32_t i : indices) agree += a[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(i)];
    return static_cast<double>(agree) / static_cast<double>(indices.size());
  };
  const Statistic stat_b = [&](std::span<const std::int32_t> indices) {
    int agree = 0;
    for (std::int32_t i : indices) agree += b[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(i)];
    return static_cast<double>(agree) / static_cast<double>(indices.size());
  };
  const BootstrapResult result = paired_difference_ci(stat_a, stat_b, n, 1000, 6);
  EXPECT_GT(result.ci_low, 0.0);
  EXPECT_TRUE(result.significant);
}

TEST(PairedDifference, PaperSignificanceRule) {
  // The reported outcome shape: difference 0.051, CI (0.005, 0.084).
  // Zero lies outside the interval, so the verdict is "significant".
  const double ci_low = 0.005;
  const double ci_high = 0.084;
  EXPECT_TRUE(ci_low > 0.0 || ci_high < 0.0);

  // And an interval containing zero is not significant.
  EXPECT_FALSE(-0.01 > 0.0 || 0.02 < 0.0);
}

TEST(Percentile, LinearInterpolation) {
  const std::vector<double> sorted{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(percentile_of_sorted(sorted, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile_of_sorted(sorted, 100.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile_of_sorted(sorted, 50.0), 2.5);
  EXPECT_DOUBLE_EQ(percentile_of_sorted(sorted, 25.0), 1.75);
}

TEST(RaterCsv, ParseAndErrors) {
  const std::string text =
      "Image Index,Rad1,Rad2,Model\n"
      "a.png,1,0,1\n"
      "b.png,0,0,1\n";
  const RaterMatrix m = parse_rater_csv_text(text, "raters.csv");
  ASSERT_EQ(m.num_raters(), 3u);
  ASSERT_EQ(m.num_images(), 2u);
  EXPECT_EQ(m.labels[0], (std::vector<int>{1, 0, 1}));

  const std::string bad =
      "Image Index,Rad1,Rad2\n"
      "a.png,1,2\n";
  try {
    parse_rater_csv_text(bad, "raters.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(PredictionCsv, ParseBoundsAndRoundTrip) {
  const std::string text =
      "Image Index,Pneumonia,Edema\n"
      "a.png,0.75,0.1\n";
  const PredictionTable t = parse_prediction_csv_text(text, "pred.csv");
  ASSERT_EQ(t.class_names.size(), 2u);
  EXPECT_DOUBLE_EQ(t.probabilities[0][0], 0.75);

  const PredictionTable back = parse_prediction_csv_text(prediction_csv_text(t), "pred.csv");
  EXPECT_EQ(back.image_ids, t.image_ids);
  EXPECT_NEAR(back.probabilities[0][1], 0.1, 1e-9);

  EXPECT_THROW(parse_prediction_csv_text("Image Index,C\na.png,1.5\n", "p.csv"), ParseError);
}

TEST(Report, IdenticalRatersAndDominance) {
  RaterMatrix identical;
  identical.rater_names = {"r1", "r2", "Model"};
  identical.model_index = 2;
  for (int i = 0; i < 12; ++i) {
    const int v = i % 4 == 0 ? 1 : 0;
    identical.labels.push_back({v, v, v});
  }
  const F1Report report = build_f1_report(identical, 300, 17);
  for (const RaterReportRow& row : report.raters) {
    EXPECT_DOUBLE_EQ(row.f1.point_estimate, 1.0);
    EXPECT_DOUBLE_EQ(row.f1.ci_low, 1.0);
    EXPECT_DOUBLE_EQ(row.f1.ci_high, 1.0);
  }
  EXPECT_TRUE(report.has_model);
  EXPECT_DOUBLE_EQ(report.difference.point_estimate, 0.0);
  EXPECT_DOUBLE_EQ(report.difference.ci_low, 0.0);
  EXPECT_DOUBLE_EQ(report.difference.ci_high, 0.0);
  EXPECT_FALSE(report.difference.significant);

  const std::string text = format_f1_report(report);
  EXPECT_NE(text.find("Radiologist Avg.,1.000"), std::string::npos);
  EXPECT_NE(text.find("not significant"), std::string::npos);
}
