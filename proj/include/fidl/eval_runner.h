// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_EVAL_RUNNER_H_
#define FIDL_EVAL_RUNNER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fidl/backend.h"
#include "fidl/data_compose.h"
#include "fidl/perturb.h"

namespace fidl {

enum class BenchmarkMetric { kAuc, kAccuracy, kPixelF1 };

std::string_view MetricName(BenchmarkMetric metric);
BenchmarkMetric ParseMetric(std::string_view name);

struct BenchmarkDef {
  std::string name;
  std::filesystem::path manifest;
  BenchmarkMetric metric = BenchmarkMetric::kAuc;
  Domain domain = Domain::kNature;
};

// {"benchmarks": [{"name", "manifest", "metric", "domain"}, ...]} or a bare
// list; manifest paths resolve against the file's directory.
std::vector<BenchmarkDef> LoadBenchmarks(const std::filesystem::path& path);

struct SampleRow {
  std::string benchmark;
  std::string id;
  int label = 0;
  Domain domain = Domain::kNature;
  std::optional<Operation> operation;
  std::optional<double> s_tamper;
  std::optional<Decision> decision;
  std::optional<bool> correct;
  std::optional<double> pixel_f1;
  std::optional<double> iou;
  // Set for samples that failed and were excluded from the metrics.
  std::optional<std::string> error;
};

struct BenchmarkResult {
  std::string name;
  Domain domain = Domain::kNature;
  BenchmarkMetric metric = BenchmarkMetric::kAuc;
  // Absent when the benchmark failed entirely.
  std::optional<double> value;
  std::size_t scored = 0;
  std::size_t failed = 0;
};

struct RunMetadata {
  std::string backend;
  std::uint64_t seed = 42;
  double temperature = 1.0;
  std::optional<std::string> perturbation;
  double decision_threshold = 0.5;
  double mask_threshold = 0.5;
  // "fixed:<id>" or "rotate".
  std::string template_policy = "fixed:0";
  std::string pixel_f1_aggregation = "per_image_mean";
};

struct EvalReport {
  RunMetadata metadata;
  std::vector<BenchmarkResult> benchmarks;
  // Mean of the present benchmark values per domain.
  std::map<Domain, double> per_domain;
  // Absent in summary-only reports.
  std::optional<std::vector<SampleRow>> per_sample;
  std::vector<std::string> warnings;

  const BenchmarkResult* Find(const std::string& name) const;
};

struct EvalOptions {
  DecodeParams decode;
  // >= 0 pins one template; -1 rotates per sample with
  // SampleTemplate(seed ^ Fnv1a64(sample id)).
  int template_id = 0;
  std::optional<PerturbationSpec> perturbation;
  double mask_threshold = 0.5;
  // Perturbed images and backend masks are written here; a fresh temporary
  // directory is used when empty.
  std::filesystem::path work_dir;
};

// Detection (and pixel_f1 benchmarks through the segmentation path).
EvalReport Run(const std::vector<BenchmarkDef>& benchmarks, Backend& backend,
               const EvalOptions& options = {});

// Every benchmark scored by per-image pixel F1 averaged per benchmark.
EvalReport RunLocalization(const std::vector<BenchmarkDef>& benchmarks,
                           Backend& backend, const EvalOptions& options = {});

// Recomputes per_domain from the benchmark values, in benchmark order.
std::map<Domain, double> DomainAverages(
    const std::vector<BenchmarkResult>& benchmarks);

struct DeltaRow {
  std::string benchmark;
  double before = 0.0;
  double after = 0.0;
  double gain_points = 0.0;  // 100 * (after - before)
};

struct DeltaTable {
  std::vector<DeltaRow> rows;
  double average_gain_points = 0.0;
};

// Per-benchmark gain of report_b over report_a in percentage points. Both
// reports must have the same set of present benchmarks (Error kAlignment
// lists the symmetric difference otherwise).
DeltaTable SupervisionDelta(const EvalReport& report_a,
                            const EvalReport& report_b);

std::string ReportToJson(const EvalReport& report);
EvalReport ReportFromJson(const std::string& text);
void WriteReport(const std::filesystem::path& path, const EvalReport& report);
EvalReport ReadReport(const std::filesystem::path& path);

}  // namespace fidl

#endif  // FIDL_EVAL_RUNNER_H_
