// SPDX-License-Identifier: Apache-2.0
#include "fidl/robustness.h"

#include <stdlib.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fidl/data_compose.h"
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
      (std::filesystem::temp_directory_path() / "fidl-sweep-XXXXXX").string();
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

void EvaluateCell(RobustnessCell& cell, const std::vector<SampleRecord>& records,
                  Backend& backend, const SweepOptions& options,
                  const std::filesystem::path& dir) {
  std::vector<DetectRequest> requests;
  std::vector<int> labels;
  std::size_t failed = 0;
  for (const auto& r : records) {
    try {
      PerturbationSpec spec = cell.spec;
      spec.rng_seed ^= Fnv1a64(r.id);
      const auto path = dir / (SafeName(r.id) + ".png");
      WritePng(path, Apply(ReadImage(r.image_ref), spec));
      const std::string question =
          options.template_id >= 0
              ? Render(options.template_id, Decision::kTampered).question
              : SampleTemplate(options.decode.seed ^ Fnv1a64(r.id)).question;
      requests.push_back({r.id, path.string(), question, options.decode});
      labels.push_back(r.label == Decision::kTampered ? 1 : 0);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kParameter) throw;
      ++failed;
    }
  }
  const auto outcomes = backend.Detect(requests);
  std::vector<ScoredLabel> scored;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (const auto* resp = std::get_if<DetectResponse>(&outcomes[i])) {
      scored.push_back({Score(LogitVector(resp->logits)).s_tamper, labels[i]});
    } else {
      ++failed;
    }
  }
  cell.failed = failed;
  cell.scored = scored.size();
  if (!scored.empty()) cell.accuracy = Accuracy(scored, kDecisionBoundary);
}

}  // namespace

PartialReportError::PartialReportError(const std::string& message,
                                       RobustnessReport partial)
    : Error(ErrorKind::kPartialReport, message), partial_(std::move(partial)) {}

const RobustnessCell* RobustnessReport::Find(PerturbationKind kind,
                                             double strength) const {
  for (const auto& c : cells) {
    if (c.spec.kind == kind && c.spec.strength == strength) return &c;
  }
  return nullptr;
}

std::optional<double> RobustnessReport::KindAverage(
    PerturbationKind kind) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : cells) {
    if (c.spec.kind != kind || !c.accuracy) continue;
    sum += *c.accuracy;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

RobustnessReport RobustnessSweep(const std::filesystem::path& manifest,
                                 Backend& backend,
                                 const std::vector<PerturbationSpec>& grid,
                                 const SweepOptions& options) {
  for (const auto& spec : grid) ValidateSpec(spec);
  std::vector<SampleRecord> records = LoadManifest(manifest).records;
  std::sort(records.begin(), records.end(),
            [](const SampleRecord& a, const SampleRecord& b) {
              return a.id < b.id;
            });
  RobustnessReport report;
  report.backend = backend.info().id;
  report.manifest = manifest.string();
  report.seed = options.decode.seed;
  report.temperature = options.decode.temperature;
  for (const auto& spec : grid) report.cells.push_back({spec, std::nullopt});

  const auto work_dir = MakeWorkDir(options.work_dir);
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    RobustnessCell& cell = report.cells[i];
    const auto dir = work_dir / ("cell" + std::to_string(i));
    std::filesystem::create_directories(dir);
    try {
      EvaluateCell(cell, records, backend, options, dir);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kParameter) throw;
      cell.accuracy.reset();
      throw PartialReportError("sweep stopped at cell " + FormatSpec(cell.spec) +
                                   ": " + e.what(),
                               report);
    }
  }
  return report;
}

std::string RobustnessToJson(const RobustnessReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"kind", std::string(KindName(c.spec.kind))},
                     {"strength", c.spec.strength},
                     {"rng_seed", c.spec.rng_seed},
                     {"accuracy", c.accuracy ? json(*c.accuracy) : json(nullptr)},
                     {"scored", c.scored},
                     {"failed", c.failed}});
  }
  json averages = json::object();
  for (PerturbationKind kind : kAllPerturbationKinds) {
    bool present = false;
    for (const auto& c : report.cells) present = present || c.spec.kind == kind;
    if (!present) continue;
    const auto avg = report.KindAverage(kind);
    averages[std::string(KindName(kind))] = avg ? json(*avg) : json(nullptr);
  }
  json j = {{"backend", report.backend},
            {"manifest", report.manifest},
            {"seed", report.seed},
            {"temperature", report.temperature},
            {"cells", cells},
            {"kind_averages", averages}};
  return j.dump(2) + "\n";
}

RobustnessReport RobustnessFromJson(const std::string& text) {
  RobustnessReport report;
  try {
    const json j = json::parse(text);
    report.backend = j.at("backend").get<std::string>();
    report.manifest = j.value("manifest", "");
    report.seed = j.value("seed", std::uint64_t{42});
    report.temperature = j.value("temperature", 1.0);
    for (const json& c : j.at("cells")) {
      RobustnessCell cell;
      cell.spec.kind = ParseKind(c.at("kind").get<std::string>());
      cell.spec.strength = c.at("strength").get<double>();
      cell.spec.rng_seed = c.value("rng_seed", std::uint64_t{0});
      if (c.contains("accuracy") && !c["accuracy"].is_null()) {
        cell.accuracy = c["accuracy"].get<double>();
      }
      cell.scored = c.value("scored", std::size_t{0});
      cell.failed = c.value("failed", std::size_t{0});
      report.cells.push_back(cell);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("robustness report: ") + e.what());
  }
  return report;
}

void WriteRobustness(const std::filesystem::path& path,
                     const RobustnessReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << RobustnessToJson(report);
}

RobustnessReport ReadRobustness(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return RobustnessFromJson(ss.str());
}

}  // namespace fidl
