// SPDX-License-Identifier: Apache-2.0
#include "fidl/vocab_scorer.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fidl/error.h"

namespace fidl {
namespace {

void CheckFinite(const LogitVector::Values& values, std::size_t batch_index) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::string msg = "logit " + std::to_string(i) + " (" +
                        std::string(DetectionVocab::Word(i)) +
                        ") is not finite";
      if (batch_index != InvalidLogitsError::npos) {
        msg = "batch element " + std::to_string(batch_index) + ": " + msg;
      }
      throw InvalidLogitsError(i, batch_index, msg);
    }
  }
}

}  // namespace

bool DetectionVocab::IsPositive(std::string_view word) {
  return std::find(kPositive.begin(), kPositive.end(), word) != kPositive.end();
}

bool DetectionVocab::IsNegative(std::string_view word) {
  return std::find(kNegative.begin(), kNegative.end(), word) != kNegative.end();
}

LogitVector::LogitVector(const Values& values) : values_(values) {
  CheckFinite(values_, InvalidLogitsError::npos);
}

LogitVector LogitVector::FromSpan(std::span<const double> values) {
  if (values.size() != DetectionVocab::kSize) {
    throw InvalidLogitsError(
        values.size(), InvalidLogitsError::npos,
        "expected " + std::to_string(DetectionVocab::kSize) +
            " logits, got " + std::to_string(values.size()));
  }
  Values v{};
  std::copy(values.begin(), values.end(), v.begin());
  return LogitVector(v);
}

std::string_view DecisionName(Decision decision) {
  return decision == Decision::kTampered ? "tampered" : "authentic";
}

LogitVector::Values SoftmaxConstrained(const LogitVector& logits) {
  const auto& z = logits.values();
  const double max = *std::max_element(z.begin(), z.end());
  LogitVector::Values p{};
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - max);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

DetectionScore Score(const LogitVector& logits) {
  const auto& z = logits.values();
  const double max = *std::max_element(z.begin(), z.end());
  double positive = 0.0;
  double negative = 0.0;
  for (std::size_t i = 0; i < DetectionVocab::kHalf; ++i) {
    positive += std::exp(z[i] - max);
    negative += std::exp(z[i + DetectionVocab::kHalf] - max);
  }
  // At least one term is exp(0) = 1, so the total is never zero.
  const double total = positive + negative;
  DetectionScore out;
  out.s_tamper = positive / total;
  out.s_real = negative / total;
  out.decision = DecideAt(out.s_tamper);
  return out;
}

std::vector<DetectionScore> ScoreBatch(std::span<const LogitVector> batch) {
  std::vector<DetectionScore> out;
  out.reserve(batch.size());
  for (const LogitVector& logits : batch) out.push_back(Score(logits));
  return out;
}

std::vector<DetectionScore> ScoreBatch(
    std::span<const LogitVector::Values> batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) CheckFinite(batch[i], i);
  std::vector<DetectionScore> out;
  out.reserve(batch.size());
  for (const auto& values : batch) out.push_back(Score(LogitVector(values)));
  return out;
}

}  // namespace fidl
