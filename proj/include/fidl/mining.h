// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_MINING_H_
#define FIDL_MINING_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fidl/data_compose.h"
#include "fidl/eval_runner.h"

namespace fidl {

// A request to synthesize more training data for a failure group. Plans are
// emitted only; nothing here calls a generator.
struct SupplementPlan {
  Domain target_domain = Domain::kNature;
  // Empty when the misclassified samples carry no operation tag.
  std::vector<Operation> target_operations;
  std::string rationale;
  std::uint64_t requested_count = 0;
  std::uint64_t error_count = 0;
};

inline constexpr std::uint64_t kSupplementMultiplier = 2;

// Groups misclassified detection samples by (domain, operation) and emits one
// plan per group: descending error count, ties by (domain name, operation
// name) ascending, truncated to k. requested_count = 2 * error count.
// Throws Error(kInsufficientDetail) when the report has no per-sample rows.
std::vector<SupplementPlan> MineBadcases(const EvalReport& report,
                                         std::size_t k);

std::string PlansToJson(const std::vector<SupplementPlan>& plans);

}  // namespace fidl

#endif  // FIDL_MINING_H_
