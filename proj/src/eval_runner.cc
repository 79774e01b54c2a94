// SPDX-License-Identifier: Apache-2.0
#include "fidl/eval_runner.h"

#include <stdlib.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fidl/error.h"
#include "fidl/metrics.h"
#include "fidl/vqa_templates.h"

namespace fidl {
namespace {

using nlohmann::json;

std::filesystem::path MakeWorkDir(const std::filesystem::path& requested) {
  if (!requested.empty()) {
    std::filesystem::create_directories(requested);
    return requested;
  }
  std::string pattern =
      (std::filesystem::temp_directory_path() / "fidl-eval-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw Error(ErrorKind::kIo, "cannot create a temporary work directory");
  }
  return pattern;
}

std::string SafeName(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return s;
}

std::string QuestionFor(const SampleRecord& record, const EvalOptions& options) {
  if (options.template_id >= 0) {
    return Render(options.template_id, Decision::kTampered).question;
  }
  return SampleTemplate(options.decode.seed ^ Fnv1a64(record.id)).question;
}

std::string TemplatePolicy(const EvalOptions& options) {
  return options.template_id >= 0
             ? "fixed:" + std::to_string(options.template_id)
             : "rotate";
}

// Writes the perturbed copy of the image and returns its path, or the
// original path when no perturbation is configured.
std::string PrepareImage(const SampleRecord& record, const EvalOptions& options,
                         const std::filesystem::path& dir) {
  if (!options.perturbation) return record.image_ref;
  PerturbationSpec spec = *options.perturbation;
  spec.rng_seed ^= Fnv1a64(record.id);
  const ImageBuffer perturbed = Apply(ReadImage(record.image_ref), spec);
  const auto path = dir / (SafeName(record.id) + ".png");
  WritePng(path, perturbed);
  return path.string();
}

SampleRow BaseRow(const BenchmarkDef& def, const SampleRecord& r) {
  SampleRow row;
  row.benchmark = def.name;
  row.id = r.id;
  row.label = r.label == Decision::kTampered ? 1 : 0;
  row.domain = r.domain;
  row.operation = r.operation;
  return row;
}

struct BenchmarkOutcome {
  BenchmarkResult result;
  std::vector<SampleRow> rows;
};

void FinishDetection(BenchmarkOutcome& out) {
  std::vector<ScoredLabel> scored;
  for (const auto& row : out.rows) {
    if (row.error) continue;
    scored.push_back({*row.s_tamper, row.label});
  }
  out.result.scored = scored.size();
  out.result.failed = out.rows.size() - scored.size();
  if (scored.empty()) {
    throw Error(ErrorKind::kEmptySet, "no sample could be scored");
  }
  if (out.result.metric == BenchmarkMetric::kAuc) {
    out.result.value = RocAuc(scored);
  } else {
    out.result.value = Accuracy(scored, kDecisionBoundary);
  }
}

BenchmarkOutcome EvaluateDetection(const BenchmarkDef& def,
                                   const std::vector<SampleRecord>& records,
                                   Backend& backend, const EvalOptions& options,
                                   const std::filesystem::path& image_dir) {
  BenchmarkOutcome out;
  out.result.name = def.name;
  out.result.domain = def.domain;
  out.result.metric = def.metric;

  std::vector<DetectRequest> requests;
  std::vector<std::size_t> request_rows;
  for (const auto& r : records) {
    out.rows.push_back(BaseRow(def, r));
    try {
      requests.push_back({r.id, PrepareImage(r, options, image_dir),
                          QuestionFor(r, options), options.decode});
      request_rows.push_back(out.rows.size() - 1);
    } catch (const std::exception& e) {
      out.rows.back().error = e.what();
    }
  }
  const auto outcomes = backend.Detect(requests);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    SampleRow& row = out.rows[request_rows[i]];
    if (const auto* err = std::get_if<ErrorResponse>(&outcomes[i])) {
      row.error = err->message;
      continue;
    }
    const auto& resp = std::get<DetectResponse>(outcomes[i]);
    const DetectionScore score = Score(LogitVector(resp.logits));
    row.s_tamper = score.s_tamper;
    row.decision = score.decision;
    row.correct = (score.decision == Decision::kTampered) == (row.label == 1);
  }
  FinishDetection(out);
  return out;
}

BenchmarkOutcome EvaluateLocalization(const BenchmarkDef& def,
                                      const std::vector<SampleRecord>& records,
                                      Backend& backend,
                                      const EvalOptions& options,
                                      const std::filesystem::path& image_dir) {
  for (const auto& r : records) {
    if (r.label == Decision::kTampered && !r.mask_ref) {
      throw Error(ErrorKind::kInput, "pixel_f1 benchmark '" + def.name +
                                         "' has tampered sample '" + r.id +
                                         "' without a mask_ref");
    }
  }
  BenchmarkOutcome out;
  out.result.name = def.name;
  out.result.domain = def.domain;
  out.result.metric = BenchmarkMetric::kPixelF1;

  std::vector<SegmentRequest> requests;
  std::vector<std::size_t> request_rows;
  for (const auto& r : records) {
    out.rows.push_back(BaseRow(def, r));
    try {
      requests.push_back({r.id, PrepareImage(r, options, image_dir),
                          QuestionFor(r, options)});
      request_rows.push_back(out.rows.size() - 1);
    } catch (const std::exception& e) {
      out.rows.back().error = e.what();
    }
  }
  const auto outcomes = backend.Segment(requests);
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    SampleRow& row = out.rows[request_rows[i]];
    const SampleRecord& record = records[request_rows[i]];
    if (const auto* err = std::get_if<ErrorResponse>(&outcomes[i])) {
      row.error = err->message;
      continue;
    }
    try {
      const auto& resp = std::get<SegmentResponse>(outcomes[i]);
      const ProbabilityMask predicted = ToProbabilityMask(ReadGrayPng(resp.mask_ref));
      BinaryMask truth = record.mask_ref
                             ? ToBinaryMask(ReadGrayPng(*record.mask_ref))
                             : BinaryMask(predicted.height, predicted.width, 0);
      row.pixel_f1 = PixelF1(predicted, truth, options.mask_threshold);
      row.iou = Iou(predicted, truth, options.mask_threshold);
      sum += *row.pixel_f1;
      ++scored;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  out.result.scored = scored;
  out.result.failed = out.rows.size() - scored;
  if (scored == 0) throw Error(ErrorKind::kEmptySet, "no sample could be scored");
  out.result.value = sum / static_cast<double>(scored);
  return out;
}

EvalReport RunImpl(const std::vector<BenchmarkDef>& benchmarks,
                   Backend& backend, const EvalOptions& options,
                   bool force_localization) {
  EvalReport report;
  report.metadata.backend = backend.info().id;
  report.metadata.seed = options.decode.seed;
  report.metadata.temperature = options.decode.temperature;
  if (options.perturbation) {
    report.metadata.perturbation = FormatSpec(*options.perturbation);
  }
  report.metadata.mask_threshold = options.mask_threshold;
  report.metadata.template_policy = TemplatePolicy(options);

  std::filesystem::path work_dir;
  if (options.perturbation) work_dir = MakeWorkDir(options.work_dir);

  std::vector<SampleRow> rows;
  for (const BenchmarkDef& def : benchmarks) {
    BenchmarkDef effective = def;
    if (force_localization) effective.metric = BenchmarkMetric::kPixelF1;
    try {
      std::vector<SampleRecord> records = LoadManifest(def.manifest).records;
      std::sort(records.begin(), records.end(),
                [](const SampleRecord& a, const SampleRecord& b) {
                  return a.id < b.id;
                });
      std::filesystem::path image_dir;
      if (options.perturbation) {
        image_dir = work_dir / SafeName(def.name);
        std::filesystem::create_directories(image_dir);
      }
      BenchmarkOutcome outcome =
          effective.metric == BenchmarkMetric::kPixelF1
              ? EvaluateLocalization(effective, records, backend, options,
                                     image_dir)
              : EvaluateDetection(effective, records, backend, options,
                                  image_dir);
      if (outcome.result.failed > 0) {
        report.warnings.push_back(def.name + ": " +
                                  std::to_string(outcome.result.failed) +
                                  " sample(s) failed and were excluded");
      }
      report.benchmarks.push_back(outcome.result);
      for (auto& row : outcome.rows) rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      BenchmarkResult absent;
      absent.name = def.name;
      absent.domain = def.domain;
      absent.metric = effective.metric;
      report.benchmarks.push_back(absent);
      report.warnings.push_back(def.name + ": benchmark absent: " + e.what());
    }
  }
  report.per_domain = DomainAverages(report.benchmarks);
  report.per_sample = std::move(rows);
  return report;
}

std::optional<double> OptDouble(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

std::string_view MetricName(BenchmarkMetric metric) {
  switch (metric) {
    case BenchmarkMetric::kAuc: return "auc";
    case BenchmarkMetric::kAccuracy: return "accuracy";
    case BenchmarkMetric::kPixelF1: return "pixel_f1";
  }
  return "unknown";
}

BenchmarkMetric ParseMetric(std::string_view name) {
  if (name == "auc") return BenchmarkMetric::kAuc;
  if (name == "accuracy") return BenchmarkMetric::kAccuracy;
  if (name == "pixel_f1") return BenchmarkMetric::kPixelF1;
  throw Error(ErrorKind::kConfig, "unknown metric '" + std::string(name) + "'");
}

std::vector<BenchmarkDef> LoadBenchmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  const json& list = j.is_object() ? j.at("benchmarks") : j;
  std::vector<BenchmarkDef> out;
  for (const json& b : list) {
    BenchmarkDef def;
    try {
      def.name = b.at("name").get<std::string>();
      std::filesystem::path manifest(b.at("manifest").get<std::string>());
      def.manifest =
          manifest.is_absolute() ? manifest : path.parent_path() / manifest;
      def.metric = ParseMetric(b.at("metric").get<std::string>());
      def.domain = ParseDomain(b.at("domain").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
    }
    out.push_back(std::move(def));
  }
  return out;
}

const BenchmarkResult* EvalReport::Find(const std::string& name) const {
  for (const auto& b : benchmarks) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

std::map<Domain, double> DomainAverages(
    const std::vector<BenchmarkResult>& benchmarks) {
  std::map<Domain, double> sums;
  std::map<Domain, std::size_t> counts;
  for (const auto& b : benchmarks) {
    if (!b.value) continue;
    sums[b.domain] += *b.value;
    ++counts[b.domain];
  }
  std::map<Domain, double> out;
  for (const auto& [d, s] : sums) {
    out[d] = s / static_cast<double>(counts[d]);
  }
  return out;
}

EvalReport Run(const std::vector<BenchmarkDef>& benchmarks, Backend& backend,
               const EvalOptions& options) {
  return RunImpl(benchmarks, backend, options, false);
}

EvalReport RunLocalization(const std::vector<BenchmarkDef>& benchmarks,
                           Backend& backend, const EvalOptions& options) {
  return RunImpl(benchmarks, backend, options, true);
}

DeltaTable SupervisionDelta(const EvalReport& report_a,
                            const EvalReport& report_b) {
  auto present = [](const EvalReport& r) {
    std::vector<std::string> names;
    for (const auto& b : r.benchmarks) {
      if (b.value) names.push_back(b.name);
    }
    return names;
  };
  const auto names_a = present(report_a);
  const auto names_b = present(report_b);
  const std::set<std::string> set_a(names_a.begin(), names_a.end());
  const std::set<std::string> set_b(names_b.begin(), names_b.end());
  if (set_a != set_b) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(set_a.begin(), set_a.end(), set_b.begin(),
                                  set_b.end(), std::back_inserter(diff));
    std::string list;
    for (const auto& n : diff) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::kAlignment, "benchmark sets differ: " + list);
  }
  DeltaTable table;
  double total = 0.0;
  for (const auto& name : names_a) {
    DeltaRow row;
    row.benchmark = name;
    row.before = *report_a.Find(name)->value;
    row.after = *report_b.Find(name)->value;
    row.gain_points = 100.0 * (row.after - row.before);
    total += row.gain_points;
    table.rows.push_back(row);
  }
  if (!table.rows.empty()) {
    table.average_gain_points = total / static_cast<double>(table.rows.size());
  }
  return table;
}

std::string ReportToJson(const EvalReport& report) {
  json j;
  const RunMetadata& m = report.metadata;
  j["metadata"] = {{"backend", m.backend},
                   {"seed", m.seed},
                   {"temperature", m.temperature},
                   {"perturbation", m.perturbation ? json(*m.perturbation)
                                                   : json(nullptr)},
                   {"decision_threshold", m.decision_threshold},
                   {"mask_threshold", m.mask_threshold},
                   {"template_policy", m.template_policy},
                   {"pixel_f1_aggregation", m.pixel_f1_aggregation}};
  json benchmarks = json::array();
  for (const auto& b : report.benchmarks) {
    benchmarks.push_back({{"name", b.name},
                          {"domain", std::string(DomainName(b.domain))},
                          {"metric", std::string(MetricName(b.metric))},
                          {"value", b.value ? json(*b.value) : json(nullptr)},
                          {"scored", b.scored},
                          {"failed", b.failed}});
  }
  j["per_benchmark"] = benchmarks;
  json domains = json::object();
  for (const auto& [d, v] : report.per_domain) {
    domains[std::string(DomainName(d))] = v;
  }
  j["per_domain"] = domains;
  if (report.per_sample) {
    json rows = json::array();
    for (const auto& r : *report.per_sample) {
      json row = {{"benchmark", r.benchmark},
                  {"id", r.id},
                  {"label", r.label},
                  {"domain", std::string(DomainName(r.domain))},
                  {"operation", r.operation
                                    ? json(std::string(OperationName(*r.operation)))
                                    : json(nullptr)}};
      if (r.s_tamper) row["s_tamper"] = *r.s_tamper;
      if (r.decision) row["decision"] = std::string(DecisionName(*r.decision));
      if (r.correct) row["correct"] = *r.correct;
      if (r.pixel_f1) row["pixel_f1"] = *r.pixel_f1;
      if (r.iou) row["iou"] = *r.iou;
      if (r.error) row["error"] = *r.error;
      rows.push_back(std::move(row));
    }
    j["per_sample"] = rows;
  }
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

EvalReport ReportFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
  EvalReport report;
  try {
    const json& m = j.at("metadata");
    report.metadata.backend = m.at("backend").get<std::string>();
    report.metadata.seed = m.at("seed").get<std::uint64_t>();
    report.metadata.temperature = m.at("temperature").get<double>();
    if (m.contains("perturbation") && !m["perturbation"].is_null()) {
      report.metadata.perturbation = m["perturbation"].get<std::string>();
    }
    report.metadata.decision_threshold = m.value("decision_threshold", 0.5);
    report.metadata.mask_threshold = m.value("mask_threshold", 0.5);
    report.metadata.template_policy = m.value("template_policy", "fixed:0");
    report.metadata.pixel_f1_aggregation =
        m.value("pixel_f1_aggregation", "per_image_mean");
    for (const json& b : j.at("per_benchmark")) {
      BenchmarkResult r;
      r.name = b.at("name").get<std::string>();
      r.domain = ParseDomain(b.at("domain").get<std::string>());
      r.metric = ParseMetric(b.at("metric").get<std::string>());
      r.value = OptDouble(b, "value");
      r.scored = b.value("scored", std::size_t{0});
      r.failed = b.value("failed", std::size_t{0});
      report.benchmarks.push_back(std::move(r));
    }
    for (const auto& [name, v] : j.at("per_domain").items()) {
      report.per_domain[ParseDomain(name)] = v.get<double>();
    }
    if (j.contains("per_sample")) {
      std::vector<SampleRow> rows;
      for (const json& s : j["per_sample"]) {
        SampleRow r;
        r.benchmark = s.at("benchmark").get<std::string>();
        r.id = s.at("id").get<std::string>();
        r.label = s.at("label").get<int>();
        r.domain = ParseDomain(s.at("domain").get<std::string>());
        if (s.contains("operation") && !s["operation"].is_null()) {
          r.operation = ParseOperation(s["operation"].get<std::string>());
        }
        r.s_tamper = OptDouble(s, "s_tamper");
        if (s.contains("decision")) {
          r.decision = s["decision"].get<std::string>() == "tampered"
                           ? Decision::kTampered
                           : Decision::kAuthentic;
        }
        if (s.contains("correct")) r.correct = s["correct"].get<bool>();
        r.pixel_f1 = OptDouble(s, "pixel_f1");
        r.iou = OptDouble(s, "iou");
        if (s.contains("error")) r.error = s["error"].get<std::string>();
        rows.push_back(std::move(r));
      }
      report.per_sample = std::move(rows);
    }
    if (j.contains("warnings")) {
      report.warnings = j["warnings"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
  return report;
}

void WriteReport(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << ReportToJson(report);
}

EvalReport ReadReport(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ReportFromJson(ss.str());
}

}  // namespace fidl
