// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_REPORT_H_
#define FIDL_REPORT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fidl/eval_runner.h"
#include "fidl/ledger.h"
#include "fidl/robustness.h"

namespace fidl {

enum class Mark { kNone, kBest, kSecond };

struct TableCell {
  std::string text;
  std::optional<double> value;  // underlying full-precision value
  Mark mark = Mark::kNone;
};

// Rows of label cells followed by one value cell per column.
struct TableRow {
  std::vector<std::string> labels;
  std::vector<TableCell> values;
  bool is_average = false;
};

struct TableDocument {
  std::string title;
  std::vector<std::string> label_headers;
  std::vector<std::string> columns;
  std::vector<TableRow> rows;
  std::vector<std::string> footnotes;

  // RFC 4180 quoting, plain values. Marks are not encoded.
  std::string ToCsv() const;
  // Aligned text; best values as **x**, second as _x_.
  std::string ToText() const;
};

// 100 * value with one decimal, correctly rounded from the binary value with
// ties to even.
std::string FormatPercent(double value);

// Marks per row: cells equal to the largest value are best, cells equal to
// the next distinct value are second. Ties share a rank; with one value cell
// there is no second.
void MarkRow(TableRow& row);

// One row per benchmark grouped by domain, followed by that domain's Avg row;
// one column per report. Throws Error(kAlignment) if the reports list
// different benchmarks for a domain.
TableDocument RenderDetectionTable(std::span<const EvalReport> reports);

// Per kind: the strength rows (ascending) then an Avg row over the completed
// cells; one column per sweep. Missing cells print "--" and are counted in a
// footnote.
TableDocument RenderRobustnessTable(std::span<const RobustnessReport> sweeps);

// CSV header "stage,domain,data_size,relative_gain" and one row per
// (run, domain with a metric).
std::string EmitSeries(std::span<const ScalingRun> runs);

void WriteText(const std::filesystem::path& path, const std::string& text);

}  // namespace fidl

#endif  // FIDL_REPORT_H_
