// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_VOCAB_SCORER_H_
#define FIDL_VOCAB_SCORER_H_

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fidl {

// The constrained detection vocabulary. Positive words first, then negative
// words, in this exact order; the wire protocol relies on it.
struct DetectionVocab {
  static constexpr std::size_t kHalf = 4;
  static constexpr std::size_t kSize = 2 * kHalf;
  static constexpr std::array<std::string_view, kHalf> kPositive = {
      "Yes", "Yeah", "True", "Sure"};
  static constexpr std::array<std::string_view, kHalf> kNegative = {
      "No", "Not", "Never", "None"};

  static std::string_view Word(std::size_t index) {
    return index < kHalf ? kPositive[index] : kNegative[index - kHalf];
  }
  static bool IsPositive(std::string_view word);
  static bool IsNegative(std::string_view word);
};

// First-token logits over DetectionVocab, positives then negatives.
// Construction validates that every entry is finite.
class LogitVector {
 public:
  using Values = std::array<double, DetectionVocab::kSize>;

  explicit LogitVector(const Values& values);
  // Throws InvalidLogitsError if the span is not exactly 8 finite values.
  static LogitVector FromSpan(std::span<const double> values);

  const Values& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Values values_;
};

enum class Decision { kAuthentic, kTampered };

std::string_view DecisionName(Decision decision);

struct DetectionScore {
  double s_tamper = 0.5;
  double s_real = 0.5;
  Decision decision = Decision::kAuthentic;
};

inline constexpr double kDecisionBoundary = 0.5;

// Strictly above the boundary is tampered; exactly 0.5 is authentic.
inline Decision DecideAt(double s_tamper, double threshold = kDecisionBoundary) {
  return s_tamper > threshold ? Decision::kTampered : Decision::kAuthentic;
}

// Max-subtracted softmax over the 8 logits.
LogitVector::Values SoftmaxConstrained(const LogitVector& logits);

DetectionScore Score(const LogitVector& logits);

// Elementwise Score, output order equals input order.
std::vector<DetectionScore> ScoreBatch(std::span<const LogitVector> batch);

// Validates raw vectors first, reporting the first bad element's batch index,
// then scores them.
std::vector<DetectionScore> ScoreBatch(
    std::span<const LogitVector::Values> batch);

}  // namespace fidl

#endif  // FIDL_VOCAB_SCORER_H_
