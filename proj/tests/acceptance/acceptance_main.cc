// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.h"
#include "fidl/backend.h"
#include "fidl/data_compose.h"
#include "fidl/error.h"
#include "fidl/eval_runner.h"
#include "fidl/image.h"
#include "fidl/ledger.h"
#include "fidl/metrics.h"
#include "fidl/perturb.h"
#include "fidl/report.h"
#include "fidl/rng.h"
#include "fidl/robustness.h"
#include "fidl/vocab_scorer.h"
#include "fidl/vqa_templates.h"
#include "frozen_values.h"

namespace fidl {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

Outcome ScorerNormalization() {
  const auto start = Clock::now();
  SplitMix64 rng(101);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int i = 0; i < 100000; ++i) {
    LogitVector::Values v;
    for (double& x : v) x = (rng.NextDouble() - 0.5) * 40.0;
    const double shift = (rng.NextDouble() - 0.5) * 200.0;
    LogitVector::Values shifted = v;
    for (double& x : shifted) x += shift;
    const DetectionScore a = Score(LogitVector(v));
    const DetectionScore b = Score(LogitVector(shifted));
    worst_sum = std::max(worst_sum, std::abs(a.s_tamper + a.s_real - 1.0));
    worst_shift = std::max(worst_shift, std::abs(a.s_tamper - b.s_tamper));
  }
  const double secs = Seconds(start);
  return {worst_sum <= 1e-12 && worst_shift <= 1e-12 && secs < 5.0,
          Fmt("max |sum-1| %.3g, max shift drift %.3g, %.2f s", worst_sum,
              worst_shift, secs)};
}

double BruteForceAuc(const std::vector<ScoredLabel>& s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& p : s) {
    if (p.label != 1) continue;
    for (const auto& n : s) {
      if (n.label != 0) continue;
      pairs += 1.0;
      wins += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Outcome AucEquivalence() {
  const auto start = Clock::now();
  SplitMix64 rng(202);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.NextBelow(199);
    const bool coarse = rng.NextBelow(2) == 0;  // coarse scores force ties
    std::vector<ScoredLabel> s(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = rng.NextDouble();
      s[k].score = coarse ? std::floor(u * 8.0) / 8.0 : u;
      s[k].label = static_cast<int>(rng.NextBelow(2));
    }
    s[0].label = 1;
    s[1].label = 0;
    worst = std::max(worst, std::abs(RocAuc(s) - BruteForceAuc(s)));
  }
  const double secs = Seconds(start);
  return {worst <= 1e-12 && secs < 30.0,
          Fmt("max deviation %.3g over 1000 instances, %.2f s", worst, secs)};
}

Outcome F1IouIdentity() {
  SplitMix64 rng(303);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t h = 1 + rng.NextBelow(32), w = 1 + rng.NextBelow(32);
    const double density = rng.NextDouble();
    ProbabilityMask p(h, w);
    BinaryMask y(h, w);
    for (std::size_t k = 0; k < p.size(); ++k) {
      p.data[k] = rng.NextDouble() < density ? 1.0 : 0.0;
      y.data[k] = rng.NextDouble() < density ? 1 : 0;
    }
    const double iou = Iou(p, y);
    worst = std::max(worst, std::abs(PixelF1(p, y) - 2.0 * iou / (1.0 + iou)));
  }
  return {worst <= 1e-12, Fmt("max deviation %.3g over 500 pairs", worst)};
}

Outcome LossOracles() {
  SplitMix64 rng(404);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    ProbabilityMask p(4, 4);
    BinaryMask y(4, 4);
    double bce = 0.0, inter = 0.0, sp = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < 16; ++k) {
      p.data[k] = rng.NextDouble();
      y.data[k] = static_cast<std::uint8_t>(rng.NextBelow(2));
      const double q = std::clamp(p.data[k], 1e-7, 1.0 - 1e-7);
      bce -= y.data[k] ? std::log(q) : std::log(1.0 - q);
      inter += p.data[k] * y.data[k];
      sp += p.data[k];
      sy += y.data[k];
    }
    bce /= 16.0;
    const double dice = 1.0 - (2.0 * inter + 1.0) / (sp + sy + 1.0);
    worst = std::max({worst, std::abs(BceLoss(p, y) - bce),
                      std::abs(DiceLoss(p, y) - dice)});
  }
  double perfect = 0.0;
  for (std::size_t fg : {100u, 256u, 1000u}) {
    ProbabilityMask p(40, 40, 0.0);
    BinaryMask y(40, 40, 0);
    for (std::size_t k = 0; k < fg; ++k) {
      p.data[k] = 1.0;
      y.data[k] = 1;
    }
    perfect = std::max(perfect, DiceLoss(p, y));
  }
  return {worst <= 1e-10 && perfect <= 1e-6,
          Fmt("max oracle deviation %.3g; perfect-mask dice %.3g", worst, perfect)};
}

Outcome TemplateFidelity() {
  const std::uint64_t checksum = Fnv1a64(TemplateTableText());
  int good = 0, total = 0;
  for (const VqaTemplate& t : ListTemplates()) {
    total += 2;
    good += StartsWithPositiveWord(t.positive_answer) &&
            !StartsWithNegativeWord(t.positive_answer);
    good += StartsWithNegativeWord(t.negative_answer) &&
            !StartsWithPositiveWord(t.negative_answer);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "checksum %016llx (%s), %d/%d answers",
                static_cast<unsigned long long>(checksum),
                checksum == frozen::kTemplateTableFnv1a64 ? "match" : "MISMATCH",
                good, total);
  return {checksum == frozen::kTemplateTableFnv1a64 && good == 20 && total == 20,
          buf};
}

ImageBuffer TestImage(int size, std::uint64_t seed) {
  ImageBuffer img(size, size);
  SplitMix64 rng(seed);
  for (auto& v : img.mutable_data()) v = static_cast<std::uint8_t>(rng.NextBelow(256));
  return img;
}

double Mse(const ImageBuffer& a, const ImageBuffer& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data().size());
}

Outcome PerturbationGrid() {
  const std::vector<std::vector<double>> table = {
      {0.5, 1.0, 1.5, 2.0, 2.5},      {0.5, 1.0, 1.5, 2.0, 2.5},
      {0.5, 1.0, 1.5, 2.0, 2.5},      {75, 80, 85, 90, 95},
      {0.05, 0.10, 0.15, 0.20, 0.25}, {128, 256, 384, 512, 640},
      {0.5, 1.0, 1.5, 2.0, 2.5}};
  const auto grid = StandardGrid();
  bool cells_ok = grid.size() == 35;
  for (std::size_t i = 0; cells_ok && i < 35; ++i) {
    cells_ok = grid[i].kind == kAllPerturbationKinds[i / 5] &&
               grid[i].strength == table[i / 5][i % 5];
  }

  const ImageBuffer img = TestImage(256, 505);
  bool noop_ok = true;
  for (PerturbationKind kind : {PerturbationKind::kBrightness,
                                PerturbationKind::kContrast,
                                PerturbationKind::kSaturation}) {
    noop_ok = noop_ok && Apply(img, {kind, 1.0}) == img;
  }
  noop_ok = noop_ok && Apply(img, {PerturbationKind::kResize, 256}) == img;

  const ImageBuffer gray(256, 256, 128);
  bool noise_ok = true;
  std::string noise_detail;
  for (double sigma : table[4]) {
    const double ideal = sigma * 255.0 * sigma * 255.0;
    const double mse = Mse(gray, Apply(gray, {PerturbationKind::kNoise, sigma, 606}));
    const double rel = mse / ideal - 1.0;
    noise_ok = noise_ok && std::abs(rel) <= 0.05;
    noise_detail += Fmt(" %.2f:%+.2f%%", sigma, 100.0 * rel);
  }
  return {cells_ok && noop_ok && noise_ok,
          std::string("35 cells ") + (cells_ok ? "ok" : "WRONG") + ", no-ops " +
              (noop_ok ? "byte-identical" : "DIFFER") +
              ", noise MSE vs sigma^2*255^2 (8-bit clamped):" + noise_detail};
}

Outcome SamplerLaw() {
  std::vector<SampleRecord> records;
  for (Domain d : kAllDomains) {
    for (int i = 0; i < 3; ++i) {
      SampleRecord r;
      r.id = std::string(DomainName(d)) + std::to_string(i);
      r.image_ref = r.id + ".png";
      r.domain = d;
      records.push_back(r);
    }
  }
  const auto draws = BalancedSample(records, UniformDomainWeights(), 100000, 707);
  std::map<Domain, double> freq;
  for (const auto& r : draws) freq[r.domain] += 1.0 / 100000.0;
  double worst = 0.0;
  for (Domain d : kAllDomains) worst = std::max(worst, std::abs(freq[d] - 0.25));
  return {draws.size() == 100000 && worst <= 0.01,
          Fmt("max |freq - 0.25| = %.4f", worst)};
}

struct EndToEnd {
  std::filesystem::path root;
  std::filesystem::path benchmarks;
  EvalReport report;
  bool ran = false;
};

EndToEnd& Corpus() {
  static EndToEnd e2e = [] {
    EndToEnd e;
    e.root = testing::MakeTempDir("fidl-accept");
    testing::CorpusOptions options;
    options.per_benchmark = 50;
    options.size = 64;
    e.benchmarks = testing::WriteCorpus(e.root / "corpus", options);
    return e;
  }();
  return e2e;
}

Outcome EndToEndDeterminism() {
  EndToEnd& e = Corpus();
  const auto start = Clock::now();
  const auto defs = LoadBenchmarks(e.benchmarks);
  BaselineBackend backend;
  EvalOptions options;
  options.work_dir = e.root / "work";
  const EvalReport a = Run(defs, backend, options);
  const EvalReport b = Run(defs, backend, options);
  const double secs = Seconds(start);
  WriteReport(e.root / "a.json", a);
  WriteReport(e.root / "b.json", b);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool identical = slurp(e.root / "a.json") == slurp(e.root / "b.json");
  e.report = a;
  e.ran = true;
  std::size_t samples = a.per_sample ? a.per_sample->size() : 0;

  const std::string cmd = std::string(FIDL_PYTHON) + " " FIDL_SOURCE_DIR
                          "/tests/oracle/eval_oracle.py " +
                          e.benchmarks.string() + " " +
                          (e.root / "a.json").string() + " 1e-6";
  const int rc = std::system(cmd.c_str());
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%zu samples, reports %s, oracle exit %d, %.2f s for two runs",
                samples, identical ? "byte-identical" : "DIFFER", rc, secs);
  return {identical && rc == 0 && samples == 200 && secs < 120.0, buf};
}

Outcome SeparableCorpus() {
  EndToEnd& e = Corpus();
  if (!e.ran) return {false, "end-to-end run unavailable"};
  std::vector<ScoredLabel> pooled;
  for (const SampleRow& row : *e.report.per_sample) {
    if (row.s_tamper) pooled.push_back({*row.s_tamper, row.label});
  }
  const double auc = RocAuc(pooled);
  double worst = 1.0;
  std::string per;
  for (const BenchmarkResult& b : e.report.benchmarks) {
    if (b.metric != BenchmarkMetric::kAuc) continue;
    const double v = b.value.value_or(0.0);
    worst = std::min(worst, v);
    per += " " + b.name + Fmt("=%.4f", v);
  }
  return {auc >= 0.95 && worst >= 0.95,
          Fmt("pooled AUC %.4f over 200 images;", auc) + per};
}

Outcome ReportShape() {
  SplitMix64 rng(808);
  std::vector<RobustnessReport> sweeps(3);
  for (std::size_t m = 0; m < sweeps.size(); ++m) {
    sweeps[m].backend = "m" + std::to_string(m);
    for (const auto& spec : StandardGrid()) {
      sweeps[m].cells.push_back({spec, rng.NextDouble(), 10, 0});
    }
  }
  const TableDocument doc = RenderRobustnessTable(sweeps);
  bool shape = doc.rows.size() == 42;
  double worst = 0.0;
  for (std::size_t k = 0; shape && k < 7; ++k) {
    for (std::size_t s = 0; s < 6; ++s) {
      const TableRow& row = doc.rows[k * 6 + s];
      shape = shape && row.labels[0] == KindName(kAllPerturbationKinds[k]) &&
              row.is_average == (s == 5);
    }
    for (std::size_t m = 0; m < sweeps.size(); ++m) {
      double sum = 0.0;
      for (std::size_t s = 0; s < 5; ++s) sum += *sweeps[m].cells[k * 5 + s].accuracy;
      worst = std::max(worst, std::abs(*doc.rows[k * 6 + 5].values[m].value - sum / 5.0));
    }
  }

  // Detection marks against a sort-based oracle, with deliberate ties.
  std::size_t checked = 0, wrong = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvalReport> reports(2 + rng.NextBelow(4));
    for (std::size_t m = 0; m < reports.size(); ++m) {
      reports[m].metadata.backend = "m" + std::to_string(m);
      for (Domain d : kAllDomains) {
        for (int b = 0; b < 2; ++b) {
          reports[m].benchmarks.push_back(
              {std::string(DomainName(d)) + std::to_string(b), d,
               BenchmarkMetric::kAuc,
               static_cast<double>(rng.NextBelow(6)) / 5.0});
        }
      }
      reports[m].per_domain = DomainAverages(reports[m].benchmarks);
    }
    const TableDocument det = RenderDetectionTable(reports);
    for (const TableRow& row : det.rows) {
      std::vector<double> values;
      for (const auto& c : row.values) values.push_back(*c.value);
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
      for (std::size_t i = 0; i < values.size(); ++i) {
        Mark expected = Mark::kNone;
        if (values[i] == sorted[0]) {
          expected = Mark::kBest;
        } else if (sorted.size() > 1 && values[i] == sorted[1]) {
          expected = Mark::kSecond;
        }
        ++checked;
        wrong += row.values[i].mark != expected;
      }
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%zu rows (%s), max Avg deviation %.3g, marks %zu/%zu agree",
                doc.rows.size(), shape ? "7 x (5 + Avg)" : "WRONG LAYOUT", worst,
                checked - wrong, checked);
  return {shape && worst <= 1e-12 && wrong == 0 && checked > 0, buf};
}

Outcome LedgerFidelity() {
  const auto dir = testing::MakeTempDir("fidl-accept-ledger");
  const auto path = dir / "ledger.jsonl";
  ScalingRun run;
  run.run_id = "deepfake-single-domain-scaling";
  run.base_manifest = "stage2_shape.jsonl";
  run.added_domain = Domain::kDeepfake;
  run.added_count = 14000000;
  run.base_domain_sizes = {{Domain::kDeepfake, 2336000}};
  run.base_metric = {{Domain::kDeepfake, 1.0}};
  run.per_domain_metric = {{Domain::kDeepfake, 0.951}};
  double stored = 0.0, reloaded = 0.0;
  {
    Ledger ledger(path);
    stored = ledger.Record(run).relative_gain.at(Domain::kDeepfake);
  }
  const Ledger again(path);
  reloaded = again.runs().at(0).relative_gain.at(Domain::kDeepfake);
  const bool same_line =
      ScalingRunToJsonLine(again.runs().at(0)) == ScalingRunToJsonLine(VerifyGains(run));

  // Random base/new pairs: stored gains equal the defining arithmetic.
  SplitMix64 rng(909);
  bool exact = true;
  for (int i = 0; i < 100; ++i) {
    ScalingRun r;
    r.run_id = "r" + std::to_string(i);
    r.added_domain = kAllDomains[rng.NextBelow(4)];
    r.added_count = 1 + rng.NextBelow(1000000);
    for (Domain d : kAllDomains) {
      r.base_domain_sizes[d] = rng.NextBelow(1000000);
      r.base_metric[d] = 0.05 + 0.95 * rng.NextDouble();
      r.per_domain_metric[d] = rng.NextDouble();
    }
    const ScalingRun back = ScalingRunFromJsonLine(
        ScalingRunToJsonLine(VerifyGains(r)), 1);
    for (Domain d : kAllDomains) {
      const double expected =
          100.0 * (r.per_domain_metric[d] - r.base_metric[d]) / r.base_metric[d];
      exact = exact && back.relative_gain.at(d) == expected;
    }
  }
  std::filesystem::remove_all(dir);
  return {stored == frozen::kScalingGainFixture && reloaded == stored && same_line &&
              exact && std::abs(stored + 4.9) < 1e-9,
          Fmt("fixture gain %.17g %%, reloaded %.17g %%", stored, reloaded) +
              (exact ? ", 100 random runs exact" : ", random runs INEXACT")};
}

}  // namespace
}  // namespace fidl

int main() {
  using fidl::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"scorer-normalization", fidl::ScorerNormalization},
      {"auc-oracle-equivalence", fidl::AucEquivalence},
      {"f1-iou-identity", fidl::F1IouIdentity},
      {"loss-oracles", fidl::LossOracles},
      {"template-fidelity", fidl::TemplateFidelity},
      {"perturbation-grid", fidl::PerturbationGrid},
      {"sampler-law", fidl::SamplerLaw},
      {"end-to-end-determinism", fidl::EndToEndDeterminism},
      {"separable-corpus", fidl::SeparableCorpus},
      {"report-shape", fidl::ReportShape},
      {"ledger-fidelity", fidl::LedgerFidelity},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::filesystem::remove_all(fidl::Corpus().root);
  std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures == 0 ? 0 : 1;
}
