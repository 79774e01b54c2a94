// SPDX-License-Identifier: Apache-2.0
#include "fidl/metrics.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fidl/error.h"
#include "fidl/rng.h"

namespace fidl {
namespace {

double BruteForceAuc(const std::vector<ScoredLabel>& s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& p : s) {
    if (p.label != 1) continue;
    for (const auto& n : s) {
      if (n.label != 0) continue;
      pairs += 1.0;
      wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

ProbabilityMask RandomProbabilities(SplitMix64& rng, std::size_t h,
                                    std::size_t w) {
  ProbabilityMask m(h, w);
  for (double& v : m.data) v = rng.NextDouble();
  return m;
}

BinaryMask RandomTruth(SplitMix64& rng, std::size_t h, std::size_t w) {
  BinaryMask m(h, w);
  for (auto& v : m.data) v = static_cast<std::uint8_t>(rng.NextBelow(2));
  return m;
}

TEST(RocAucTest, PerfectInvertedAndTied) {
  const std::vector<ScoredLabel> perfect = {{0.9, 1}, {0.8, 1}, {0.1, 0}};
  EXPECT_DOUBLE_EQ(RocAuc(perfect), 1.0);
  const std::vector<ScoredLabel> inverted = {{0.1, 1}, {0.9, 0}};
  EXPECT_DOUBLE_EQ(RocAuc(inverted), 0.0);
  const std::vector<ScoredLabel> tied = {{0.5, 1}, {0.5, 0}, {0.5, 1}};
  EXPECT_DOUBLE_EQ(RocAuc(tied), 0.5);
}

TEST(RocAucTest, SingleClassIsDegenerate) {
  const std::vector<ScoredLabel> one = {{0.9, 1}, {0.2, 1}};
  try {
    RocAuc(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateClasses);
  }
  EXPECT_THROW(RocAuc({}), Error);
}

TEST(RocAucTest, MatchesPairCountingWithHeavyTies) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredLabel> s(2 + rng.NextBelow(60));
    for (auto& x : s) {
      x.score = static_cast<double>(rng.NextBelow(5)) / 4.0;
      x.label = static_cast<int>(rng.NextBelow(2));
    }
    s[0].label = 0;
    s[1].label = 1;
    EXPECT_NEAR(RocAuc(s), BruteForceAuc(s), 1e-12);
  }
}

TEST(RocAucTest, InvariantToMonotoneTransforms) {
  SplitMix64 rng(5);
  std::vector<ScoredLabel> s(100), t(100);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = {rng.NextDouble(), static_cast<int>(i % 2)};
    t[i] = {s[i].score * s[i].score * s[i].score, s[i].label};
  }
  EXPECT_DOUBLE_EQ(RocAuc(s), RocAuc(t));
}

TEST(AccuracyTest, StrictThresholdAndEmptySet) {
  const std::vector<ScoredLabel> s = {{0.5, 0}, {0.51, 1}, {0.2, 1}, {0.9, 0}};
  EXPECT_DOUBLE_EQ(Accuracy(s), 0.5);
  try {
    Accuracy({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptySet);
  }
}

TEST(PixelMetricsTest, HandComputedCounts) {
  ProbabilityMask p(2, 2);
  p.data = {0.9, 0.6, 0.5, 0.1};
  BinaryMask y(2, 2);
  y.data = {1, 0, 1, 0};
  const PixelCounts c = CountPixels(p, y, 0.5);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_DOUBLE_EQ(PixelF1(p, y), 0.5);
  EXPECT_DOUBLE_EQ(Iou(p, y), 1.0 / 3.0);
}

TEST(PixelMetricsTest, BothEmptyScoresOne) {
  const ProbabilityMask p(4, 4, 0.1);
  const BinaryMask y(4, 4, 0);
  EXPECT_DOUBLE_EQ(PixelF1(p, y), 1.0);
  EXPECT_DOUBLE_EQ(Iou(p, y), 1.0);
  const BinaryMask full(4, 4, 1);
  EXPECT_DOUBLE_EQ(PixelF1(p, full), 0.0);
}

TEST(PixelMetricsTest, F1IouIdentity) {
  SplitMix64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto p = RandomProbabilities(rng, 8, 9);
    const auto y = RandomTruth(rng, 8, 9);
    const double iou = Iou(p, y);
    EXPECT_NEAR(PixelF1(p, y), 2.0 * iou / (1.0 + iou), 1e-12);
  }
}

TEST(PixelMetricsTest, ShapeAndDomainErrors) {
  const ProbabilityMask p(2, 3, 0.5);
  const BinaryMask y(3, 2, 0);
  try {
    PixelF1(p, y);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
  ProbabilityMask bad(2, 2, 0.5);
  bad.data[1] = 1.5;
  EXPECT_THROW(PixelF1(bad, BinaryMask(2, 2, 0)), Error);
  BinaryMask bad_truth(2, 2, 0);
  bad_truth.data[0] = 2;
  EXPECT_THROW(Iou(ProbabilityMask(2, 2, 0.5), bad_truth), Error);
}

TEST(LossTest, BceAndDiceMatchDirectSums) {
  SplitMix64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto p = RandomProbabilities(rng, 4, 4);
    const auto y = RandomTruth(rng, 4, 4);
    double bce = 0.0, inter = 0.0, sp = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double q = std::min(std::max(p.data[k], 1e-7), 1.0 - 1e-7);
      bce -= y.data[k] ? std::log(q) : std::log(1.0 - q);
      inter += p.data[k] * y.data[k];
      sp += p.data[k];
      sy += y.data[k];
    }
    bce /= 16.0;
    const double dice = 1.0 - (2.0 * inter + 1.0) / (sp + sy + 1.0);
    EXPECT_NEAR(BceLoss(p, y), bce, 1e-10);
    EXPECT_NEAR(DiceLoss(p, y), dice, 1e-10);
    EXPECT_NEAR(SegLoss(p, y), bce + dice, 1e-10);
  }
}

TEST(LossTest, ClampKeepsBceFinite) {
  ProbabilityMask p(1, 2);
  p.data = {0.0, 1.0};
  BinaryMask y(1, 2);
  y.data = {1, 0};
  EXPECT_NEAR(BceLoss(p, y), -std::log(1e-7), 1e-6);
}

TEST(LossTest, PerfectMaskDiceNearZero) {
  BinaryMask y(16, 16, 0);
  ProbabilityMask p(16, 16, 0.0);
  for (std::size_t k = 0; k < 128; ++k) {
    y.data[k] = 1;
    p.data[k] = 1.0;
  }
  EXPECT_LE(DiceLoss(p, y), 1e-6);
}

TEST(LossTest, SftLossWeightsAndDomain) {
  EXPECT_DOUBLE_EQ(SftLoss(2.0, 3.0, {0.5, 2.0}), 7.0);
  EXPECT_DOUBLE_EQ(SftLoss(2.0, 3.0, {}), 5.0);
  EXPECT_THROW(SftLoss(-1.0, 0.0, {}), Error);
}

}  // namespace
}  // namespace fidl
