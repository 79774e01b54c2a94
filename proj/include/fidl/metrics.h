// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_METRICS_H_
#define FIDL_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fidl {

// Row-major 2-D grid.
template <typename T>
struct Grid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::size_t h, std::size_t w, T fill = T{})
      : height(h), width(w), data(h * w, fill) {}

  T& at(std::size_t row, std::size_t col) { return data[row * width + col]; }
  const T& at(std::size_t row, std::size_t col) const {
    return data[row * width + col];
  }
  std::size_t size() const { return data.size(); }
};

// Predicted per-pixel forgery probabilities in [0, 1].
using ProbabilityMask = Grid<double>;
// Ground truth, entries in {0, 1}.
using BinaryMask = Grid<std::uint8_t>;

struct ScoredLabel {
  double score = 0.0;  // s_tamper
  int label = 0;       // 1 = tampered, 0 = authentic
};

struct LossWeights {
  double lambda_txt = 1.0;
  double lambda_seg = 1.0;
};

inline constexpr double kBceEpsilon = 1e-7;
inline constexpr double kDiceSmoothing = 1.0;
inline constexpr double kDefaultMaskThreshold = 0.5;

struct PixelCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

// Binarizes `predicted` with p > threshold and counts against `truth`.
// Throws ShapeError on dimension mismatch and Error(kDomain) for entries
// outside their ranges.
PixelCounts CountPixels(const ProbabilityMask& predicted,
                        const BinaryMask& truth, double threshold);

// Mann-Whitney AUC with half credit for ties, via midranks. Requires at least
// one sample of each class (Error kDegenerateClasses otherwise).
double RocAuc(std::span<const ScoredLabel> samples);

// Fraction of samples whose decision (score > threshold) matches the label.
double Accuracy(std::span<const ScoredLabel> samples,
                double threshold = 0.5);

// 2TP / (2TP + FP + FN); 1.0 when both masks are empty.
double PixelF1(const ProbabilityMask& predicted, const BinaryMask& truth,
               double threshold = kDefaultMaskThreshold);
// TP / (TP + FP + FN); 1.0 when both masks are empty.
double Iou(const ProbabilityMask& predicted, const BinaryMask& truth,
           double threshold = kDefaultMaskThreshold);

// Mean pixel BCE with predictions clamped to [eps, 1 - eps].
double BceLoss(const ProbabilityMask& predicted, const BinaryMask& truth);
// Soft Dice: 1 - (2 sum(p y) + s) / (sum(p) + sum(y) + s), s = 1.
double DiceLoss(const ProbabilityMask& predicted, const BinaryMask& truth);
// BceLoss + DiceLoss.
double SegLoss(const ProbabilityMask& predicted, const BinaryMask& truth);
// lambda_txt * txt_nll + lambda_seg * seg. Negative inputs are domain errors.
double SftLoss(double txt_nll, double seg, const LossWeights& weights);

}  // namespace fidl

#endif  // FIDL_METRICS_H_
