// SPDX-License-Identifier: Apache-2.0
#include "fidl/mining.h"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "fidl/error.h"

namespace fidl {
namespace {

struct GroupKey {
  std::string domain;
  std::string operation;  // "" for untagged samples
  auto operator<=>(const GroupKey&) const = default;
};

struct Group {
  Domain domain = Domain::kNature;
  std::optional<Operation> operation;
  std::uint64_t errors = 0;
  std::set<std::string> benchmarks;
};

}  // namespace

std::vector<SupplementPlan> MineBadcases(const EvalReport& report,
                                         std::size_t k) {
  if (!report.per_sample) {
    throw Error(ErrorKind::kInsufficientDetail,
                "report has no per-sample rows; rerun with per-sample output");
  }
  std::map<GroupKey, Group> groups;
  for (const SampleRow& row : *report.per_sample) {
    if (!row.correct || *row.correct) continue;
    const GroupKey key{
        std::string(DomainName(row.domain)),
        row.operation ? std::string(OperationName(*row.operation)) : ""};
    Group& g = groups[key];
    g.domain = row.domain;
    g.operation = row.operation;
    ++g.errors;
    g.benchmarks.insert(row.benchmark);
  }
  std::vector<std::pair<GroupKey, Group>> ordered(groups.begin(), groups.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) {
                     return a.second.errors > b.second.errors;
                   });
  if (ordered.size() > k) ordered.resize(k);

  std::vector<SupplementPlan> plans;
  for (const auto& [key, g] : ordered) {
    SupplementPlan plan;
    plan.target_domain = g.domain;
    if (g.operation) plan.target_operations.push_back(*g.operation);
    plan.error_count = g.errors;
    plan.requested_count = kSupplementMultiplier * g.errors;
    std::string benchmarks;
    for (const auto& b : g.benchmarks) {
      benchmarks += (benchmarks.empty() ? "" : ", ") + b;
    }
    plan.rationale = std::to_string(g.errors) + " misclassified " + key.domain +
                     " sample(s)" +
                     (g.operation ? " tagged " + key.operation : " without an operation tag") +
                     " in " + benchmarks;
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::string PlansToJson(const std::vector<SupplementPlan>& plans) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : plans) {
    nlohmann::json ops = nlohmann::json::array();
    for (Operation op : p.target_operations) {
      ops.push_back(std::string(OperationName(op)));
    }
    out.push_back({{"target_domain", std::string(DomainName(p.target_domain))},
                   {"target_operations", ops},
                   {"rationale", p.rationale},
                   {"requested_count", p.requested_count},
                   {"error_count", p.error_count}});
  }
  return out.dump(2) + "\n";
}

}  // namespace fidl
