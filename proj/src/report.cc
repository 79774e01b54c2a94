// SPDX-License-Identifier: Apache-2.0
#include "fidl/report.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fidl/error.h"

namespace fidl {
namespace {

constexpr const char* kMissing = "--";

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string CsvLine(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += CsvField(fields[i]);
  }
  return line + "\r\n";
}

TableCell ValueCell(std::optional<double> value) {
  TableCell cell;
  cell.value = value;
  cell.text = value ? FormatPercent(*value) : kMissing;
  return cell;
}

std::string Decorated(const TableCell& cell) {
  switch (cell.mark) {
    case Mark::kBest: return "**" + cell.text + "**";
    case Mark::kSecond: return "_" + cell.text + "_";
    case Mark::kNone: break;
  }
  return cell.text;
}

std::string RepeatDash(std::size_t n) { return std::string(n, '-'); }

}  // namespace

std::string FormatPercent(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", value * 100.0);
  std::string out(buf);
  if (out == "-0.0") out = "0.0";
  return out;
}

void MarkRow(TableRow& row) {
  std::set<double, std::greater<>> distinct;
  for (const auto& c : row.values) {
    if (c.value) distinct.insert(*c.value);
  }
  const std::vector<double> ranked(distinct.begin(), distinct.end());
  for (auto& c : row.values) {
    c.mark = Mark::kNone;
    if (!c.value) continue;
    if (*c.value == ranked[0]) {
      c.mark = Mark::kBest;
    } else if (ranked.size() > 1 && *c.value == ranked[1]) {
      c.mark = Mark::kSecond;
    }
  }
}

std::string TableDocument::ToCsv() const {
  std::string out;
  std::vector<std::string> header = label_headers;
  header.insert(header.end(), columns.begin(), columns.end());
  out += CsvLine(header);
  for (const auto& row : rows) {
    std::vector<std::string> fields = row.labels;
    for (const auto& c : row.values) fields.push_back(c.text);
    out += CsvLine(fields);
  }
  return out;
}

std::string TableDocument::ToText() const {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header = label_headers;
  header.insert(header.end(), columns.begin(), columns.end());
  grid.push_back(header);
  for (const auto& row : rows) {
    std::vector<std::string> line = row.labels;
    for (const auto& c : row.values) line.push_back(Decorated(c));
    grid.push_back(line);
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size() && i < widths.size(); ++i) {
      widths[i] = std::max(widths[i], line[i].size());
    }
  }
  const std::size_t n_labels = label_headers.size();
  auto render = [&](const std::vector<std::string>& line) {
    std::string s;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) s += "  ";
      const std::size_t pad = widths[i] - line[i].size();
      if (i < n_labels) {
        s += line[i] + std::string(pad, ' ');
      } else {
        s += std::string(pad, ' ') + line[i];
      }
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out;
  if (!title.empty()) out += title + "\n";
  out += render(grid[0]);
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  total += widths.empty() ? 0 : 2 * (widths.size() - 1);
  out += RepeatDash(total) + "\n";
  for (std::size_t r = 1; r < grid.size(); ++r) {
    out += render(grid[r]);
    if (rows[r - 1].is_average && r + 1 < grid.size()) {
      out += RepeatDash(total) + "\n";
    }
  }
  for (const auto& note : footnotes) out += note + "\n";
  return out;
}

TableDocument RenderDetectionTable(std::span<const EvalReport> reports) {
  if (reports.empty()) {
    throw Error(ErrorKind::kInput, "no reports to render");
  }
  TableDocument doc;
  doc.title = "Detection results (%)";
  doc.label_headers = {"Domain", "Benchmark", "Metric"};
  for (const auto& r : reports) doc.columns.push_back(r.metadata.backend);

  for (Domain domain : kAllDomains) {
    auto names_of = [domain](const EvalReport& r) {
      std::vector<std::string> names;
      for (const auto& b : r.benchmarks) {
        if (b.domain == domain) names.push_back(b.name);
      }
      return names;
    };
    const std::vector<std::string> names = names_of(reports[0]);
    const std::set<std::string> reference(names.begin(), names.end());
    for (std::size_t i = 1; i < reports.size(); ++i) {
      const auto other = names_of(reports[i]);
      const std::set<std::string> set(other.begin(), other.end());
      if (set != reference) {
        std::vector<std::string> diff;
        std::set_symmetric_difference(reference.begin(), reference.end(),
                                      set.begin(), set.end(),
                                      std::back_inserter(diff));
        std::string list;
        for (const auto& n : diff) list += (list.empty() ? "" : ", ") + n;
        throw Error(ErrorKind::kAlignment,
                    std::string(DomainName(domain)) + " benchmarks of '" +
                        reports[i].metadata.backend + "' differ from '" +
                        reports[0].metadata.backend + "': " + list);
      }
    }
    if (names.empty()) continue;
    for (const auto& name : names) {
      TableRow row;
      const BenchmarkResult* first = reports[0].Find(name);
      row.labels = {std::string(DomainName(domain)), name,
                    std::string(MetricName(first->metric))};
      for (const auto& r : reports) row.values.push_back(ValueCell(r.Find(name)->value));
      MarkRow(row);
      doc.rows.push_back(std::move(row));
    }
    TableRow avg;
    avg.is_average = true;
    avg.labels = {std::string(DomainName(domain)), "Avg", ""};
    for (const auto& r : reports) {
      const auto it = r.per_domain.find(domain);
      avg.values.push_back(
          ValueCell(it == r.per_domain.end() ? std::nullopt
                                             : std::optional(it->second)));
    }
    MarkRow(avg);
    doc.rows.push_back(std::move(avg));
  }
  return doc;
}

TableDocument RenderRobustnessTable(std::span<const RobustnessReport> sweeps) {
  if (sweeps.empty()) {
    throw Error(ErrorKind::kInput, "no sweeps to render");
  }
  TableDocument doc;
  doc.title = "Robustness (accuracy, %)";
  doc.label_headers = {"Perturbation", "Strength"};
  for (const auto& s : sweeps) doc.columns.push_back(s.backend);

  std::size_t missing = 0;
  for (PerturbationKind kind : kAllPerturbationKinds) {
    std::set<double> strengths;
    for (const auto& s : sweeps) {
      for (const auto& c : s.cells) {
        if (c.spec.kind == kind) strengths.insert(c.spec.strength);
      }
    }
    if (strengths.empty()) continue;
    const std::string kind_name(KindName(kind));
    for (double strength : strengths) {
      TableRow row;
      row.labels = {kind_name, FormatStrength(strength)};
      for (const auto& s : sweeps) {
        const RobustnessCell* cell = s.Find(kind, strength);
        const std::optional<double> v =
            cell ? cell->accuracy : std::optional<double>();
        if (!v) ++missing;
        row.values.push_back(ValueCell(v));
      }
      MarkRow(row);
      doc.rows.push_back(std::move(row));
    }
    TableRow avg;
    avg.is_average = true;
    avg.labels = {kind_name, "Avg"};
    for (const auto& s : sweeps) avg.values.push_back(ValueCell(s.KindAverage(kind)));
    MarkRow(avg);
    doc.rows.push_back(std::move(avg));
  }
  if (missing > 0) {
    doc.footnotes.push_back(std::to_string(missing) +
                            " cell(s) missing (\"--\"); Avg rows exclude them.");
  }
  return doc;
}

std::string EmitSeries(std::span<const ScalingRun> runs) {
  std::string out = "stage,domain,data_size,relative_gain\r\n";
  for (const ScalingRun& run : runs) {
    const ScalingRun verified = VerifyGains(run);
    for (const auto& [domain, gain] : verified.relative_gain) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", gain);
      out += CsvLine({run.run_id, std::string(DomainName(domain)),
                      std::to_string(verified.DataSize(domain)), buf});
    }
  }
  return out;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace fidl
