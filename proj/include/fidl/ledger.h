// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_LEDGER_H_
#define FIDL_LEDGER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "fidl/data_compose.h"

namespace fidl {

// One data-scaling experiment: a base composition plus `added_count` new
// samples in `added_domain`, with per-domain metrics before and after.
struct ScalingRun {
  std::string run_id;
  std::string base_manifest;
  Domain added_domain = Domain::kDeepfake;
  std::uint64_t added_count = 0;
  std::map<Domain, std::uint64_t> base_domain_sizes;
  std::map<Domain, double> base_metric;
  std::map<Domain, double> per_domain_metric;
  // Percent change against base_metric. Filled in by the ledger when empty.
  std::map<Domain, double> relative_gain;

  // Training-set size of `domain` after this run's addition.
  std::uint64_t DataSize(Domain domain) const;
};

inline constexpr double kGainTolerance = 1e-9;

// 100 * (new - base) / base. Throws Error(kDomain) when base is zero.
double RelativeGain(double base, double updated);

// Recomputes every gain from the metrics. Throws Error(kConsistency) if a
// domain has a metric without a base, or if a provided gain disagrees by
// more than kGainTolerance; returns the run with recomputed gains.
ScalingRun VerifyGains(ScalingRun run);

// Append-only JSONL ledger, one ScalingRun per line. Appends are serialized
// through an internal mutex; each line is flushed before Record returns.
class Ledger {
 public:
  // Loads and verifies existing lines; a missing file is an empty ledger.
  explicit Ledger(std::filesystem::path path);

  // Rejects duplicate run ids (Error kIntegrity) and inconsistent gains.
  const ScalingRun& Record(ScalingRun run);

  const std::vector<ScalingRun>& runs() const { return runs_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<ScalingRun> runs_;
  std::mutex mu_;
};

std::string ScalingRunToJsonLine(const ScalingRun& run);
ScalingRun ScalingRunFromJsonLine(const std::string& line, std::size_t line_no);

}  // namespace fidl

#endif  // FIDL_LEDGER_H_
