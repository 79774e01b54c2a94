// SPDX-License-Identifier: Apache-2.0
#include "fidl/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fidl/error.h"

namespace fidl {
namespace {

void CheckPair(const ProbabilityMask& predicted, const BinaryMask& truth) {
  if (predicted.height != truth.height || predicted.width != truth.width) {
    throw ShapeError(predicted.height, predicted.width, truth.height,
                     truth.width);
  }
  if (predicted.data.size() != predicted.height * predicted.width ||
      truth.data.size() != truth.height * truth.width) {
    throw Error(ErrorKind::kShape, "grid storage does not match dimensions");
  }
  for (double p : predicted.data) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::kDomain,
                  "predicted probability outside [0, 1]: " + std::to_string(p));
    }
  }
  for (std::uint8_t y : truth.data) {
    if (y > 1) {
      throw Error(ErrorKind::kDomain, "truth mask entry not in {0, 1}");
    }
  }
}

void CheckSamples(std::span<const ScoredLabel> samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ScoredLabel& s = samples[i];
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw Error(ErrorKind::kDomain, "sample " + std::to_string(i) +
                                          ": score outside [0, 1]");
    }
    if (s.label != 0 && s.label != 1) {
      throw Error(ErrorKind::kDomain,
                  "sample " + std::to_string(i) + ": label not in {0, 1}");
    }
  }
}

}  // namespace

PixelCounts CountPixels(const ProbabilityMask& predicted,
                        const BinaryMask& truth, double threshold) {
  CheckPair(predicted, truth);
  PixelCounts c;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const bool p = predicted.data[i] > threshold;
    const bool y = truth.data[i] != 0;
    if (p && y) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (y) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double RocAuc(std::span<const ScoredLabel> samples) {
  CheckSamples(samples);
  std::size_t positives = 0;
  for (const auto& s : samples) positives += static_cast<std::size_t>(s.label);
  const std::size_t negatives = samples.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::kDegenerateClasses,
                "AUC needs both classes (positives=" +
                    std::to_string(positives) +
                    ", negatives=" + std::to_string(negatives) + ")");
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });

  // Sum of 1-based midranks of the positives. Ranks are half-integers, so
  // the sum is exact in double for any realistic sample count.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::size_t group_positives = 0;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) {
      group_positives += static_cast<std::size_t>(samples[order[j]].label);
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    positive_rank_sum += midrank * static_cast<double>(group_positives);
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * n);
}

double Accuracy(std::span<const ScoredLabel> samples, double threshold) {
  if (samples.empty()) {
    throw Error(ErrorKind::kEmptySet, "accuracy of an empty sample set");
  }
  CheckSamples(samples);
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const int predicted = s.score > threshold ? 1 : 0;
    correct += predicted == s.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double PixelF1(const ProbabilityMask& predicted, const BinaryMask& truth,
               double threshold) {
  const PixelCounts c = CountPixels(predicted, truth, threshold);
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double Iou(const ProbabilityMask& predicted, const BinaryMask& truth,
           double threshold) {
  const PixelCounts c = CountPixels(predicted, truth, threshold);
  const std::size_t uni = c.tp + c.fp + c.fn;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(uni);
}

double BceLoss(const ProbabilityMask& predicted, const BinaryMask& truth) {
  CheckPair(predicted, truth);
  if (truth.data.empty()) {
    throw Error(ErrorKind::kEmptySet, "BCE over an empty mask");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const double p =
        std::clamp(predicted.data[i], kBceEpsilon, 1.0 - kBceEpsilon);
    total += truth.data[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(truth.data.size());
}

double DiceLoss(const ProbabilityMask& predicted, const BinaryMask& truth) {
  CheckPair(predicted, truth);
  double intersection = 0.0;
  double sum_p = 0.0;
  double sum_y = 0.0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const double p = predicted.data[i];
    const double y = truth.data[i];
    intersection += p * y;
    sum_p += p;
    sum_y += y;
  }
  return 1.0 - (2.0 * intersection + kDiceSmoothing) /
                   (sum_p + sum_y + kDiceSmoothing);
}

double SegLoss(const ProbabilityMask& predicted, const BinaryMask& truth) {
  return BceLoss(predicted, truth) + DiceLoss(predicted, truth);
}

double SftLoss(double txt_nll, double seg, const LossWeights& weights) {
  if (!(txt_nll >= 0.0) || !(seg >= 0.0) || !std::isfinite(txt_nll) ||
      !std::isfinite(seg)) {
    throw Error(ErrorKind::kDomain, "loss terms must be finite and >= 0");
  }
  if (!(weights.lambda_txt >= 0.0) || !(weights.lambda_seg >= 0.0) ||
      !std::isfinite(weights.lambda_txt) || !std::isfinite(weights.lambda_seg)) {
    throw Error(ErrorKind::kDomain, "loss weights must be finite and >= 0");
  }
  return weights.lambda_txt * txt_nll + weights.lambda_seg * seg;
}

}  // namespace fidl
