// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fidl/backend.h"
#include "fidl/data_compose.h"
#include "fidl/error.h"
#include "fidl/eval_runner.h"
#include "fidl/ledger.h"
#include "fidl/mining.h"
#include "fidl/perturb.h"
#include "fidl/report.h"
#include "fidl/robustness.h"
#include "fidl/vqa_templates.h"

namespace {

using nlohmann::json;

std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fidl::Error(fidl::ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    fidl::WriteText(path, text);
  }
}

int ParseTemplatePolicy(const std::string& text) {
  if (text == "rotate") return -1;
  const int id = std::stoi(text);
  if (id < 0 || id >= fidl::kTemplateCount) {
    throw fidl::Error(fidl::ErrorKind::kUnknownTemplate,
                      "template id " + text + " outside [0, 9]");
  }
  return id;
}

// "uniform" or "deepfake=0.4,aigc=0.2,...".
std::map<fidl::Domain, double> ParseWeights(const std::string& text) {
  if (text == "uniform") return fidl::UniformDomainWeights();
  std::map<fidl::Domain, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw fidl::Error(fidl::ErrorKind::kConfig,
                        "weight '" + item + "' is not domain=value");
    }
    out[fidl::ParseDomain(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
  }
  return out;
}

// A JSON object of domain -> metric, or an eval report's per_domain block.
std::map<fidl::Domain, double> LoadMetrics(const std::string& path) {
  const json j = json::parse(ReadAll(path));
  const json& m = j.contains("per_domain") ? j["per_domain"] : j;
  std::map<fidl::Domain, double> out;
  for (const auto& [name, v] : m.items()) {
    out[fidl::ParseDomain(name)] = v.get<double>();
  }
  return out;
}

struct EvalArgs {
  std::string benchmarks;
  std::string backend = "baseline";
  std::string perturb;
  std::uint64_t seed = 42;
  double temperature = 1.0;
  std::string template_policy = "0";
  double mask_threshold = fidl::kDefaultMaskThreshold;
  std::string mask_dir;
  std::string work_dir;
  bool summary_only = false;
  int timeout_ms = 60000;
  std::string out;
};

void AddEvalOptions(CLI::App* cmd, EvalArgs& a, bool with_perturb) {
  cmd->add_option("--benchmarks", a.benchmarks, "benchmark list (JSON)")
      ->required();
  cmd->add_option("--backend", a.backend,
                  "mock[:cfg] | baseline | tcp://host:port | shell command");
  if (with_perturb) {
    cmd->add_option("--perturb", a.perturb, "perturbation, e.g. jpeg:75");
  }
  cmd->add_option("--seed", a.seed, "decode seed");
  cmd->add_option("--temperature", a.temperature, "decode temperature");
  cmd->add_option("--template", a.template_policy, "template id or 'rotate'");
  cmd->add_option("--mask-threshold", a.mask_threshold);
  cmd->add_option("--mask-dir", a.mask_dir, "where built-in backends write masks");
  cmd->add_option("--work-dir", a.work_dir, "where perturbed copies go");
  cmd->add_flag("--summary-only", a.summary_only, "omit per-sample rows");
  cmd->add_option("--timeout-ms", a.timeout_ms, "per-response backend timeout");
  cmd->add_option("--out", a.out, "report path (default stdout)");
}

fidl::EvalReport RunEval(const EvalArgs& a, bool localize) {
  fidl::RemoteOptions remote;
  remote.timeout = std::chrono::milliseconds(a.timeout_ms);
  auto backend = fidl::MakeBackend(a.backend, a.mask_dir, remote);
  fidl::EvalOptions options;
  options.decode.seed = a.seed;
  options.decode.temperature = a.temperature;
  options.template_id = ParseTemplatePolicy(a.template_policy);
  if (!a.perturb.empty()) options.perturbation = fidl::ParseSpec(a.perturb);
  options.mask_threshold = a.mask_threshold;
  options.work_dir = a.work_dir;
  const auto defs = fidl::LoadBenchmarks(a.benchmarks);
  fidl::EvalReport report = localize ? fidl::RunLocalization(defs, *backend, options)
                                     : fidl::Run(defs, *backend, options);
  if (a.summary_only) report.per_sample.reset();
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forgery detection and localization evaluation harness"};
  app.require_subcommand(1);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "apply one perturbation");
  std::string p_in, p_kind, p_out;
  double p_strength = 0.0;
  std::uint64_t p_seed = 0;
  perturb->add_option("--in", p_in)->required();
  perturb->add_option("--kind", p_kind)->required();
  perturb->add_option("--strength", p_strength)->required();
  perturb->add_option("--seed", p_seed, "noise seed");
  perturb->add_option("--out", p_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "run benchmarks");
  eval->require_subcommand(1);
  EvalArgs run_args, loc_args;
  auto* eval_run = eval->add_subcommand("run", "detection benchmarks");
  AddEvalOptions(eval_run, run_args, true);
  auto* eval_loc = eval->add_subcommand("localize", "pixel F1 on every benchmark");
  AddEvalOptions(eval_loc, loc_args, true);
  auto* eval_delta = eval->add_subcommand("delta", "gain of one report over another");
  std::string d_before, d_after, d_out;
  eval_delta->add_option("--before", d_before)->required();
  eval_delta->add_option("--after", d_after)->required();
  eval_delta->add_option("--out", d_out);

  // compose
  auto* compose = app.add_subcommand("compose", "data mixtures");
  compose->require_subcommand(1);
  auto* c_sample = compose->add_subcommand("sample", "balanced domain sampling");
  std::string cs_manifest, cs_weights = "uniform", cs_out;
  std::size_t cs_n = 0;
  std::uint64_t cs_seed = 0;
  c_sample->add_option("--manifest", cs_manifest)->required();
  c_sample->add_option("--n", cs_n)->required();
  c_sample->add_option("--seed", cs_seed);
  c_sample->add_option("--weights", cs_weights, "uniform or domain=w,...");
  c_sample->add_option("--out", cs_out);
  auto* c_recompose = compose->add_subcommand("recompose", "reweight weak domains");
  std::string cr_manifest, cr_metrics, cr_out;
  double cr_floor = 0.8;
  c_recompose->add_option("--manifest", cr_manifest)->required();
  c_recompose->add_option("--metrics", cr_metrics, "domain metrics or eval report")
      ->required();
  c_recompose->add_option("--floor", cr_floor);
  c_recompose->add_option("--out", cr_out);
  auto* c_ledger = compose->add_subcommand("ledger", "scaling-run ledger");
  std::string cl_ledger, cl_run;
  c_ledger->add_option("--ledger", cl_ledger)->required();
  c_ledger->add_option("--record", cl_run, "JSON file with one run to append");
  auto* c_mine = compose->add_subcommand("mine", "supplementation plans");
  std::string cm_report, cm_out;
  std::size_t cm_k = 10;
  c_mine->add_option("--report", cm_report)->required();
  c_mine->add_option("--k", cm_k);
  c_mine->add_option("--out", cm_out);

  // report
  auto* report = app.add_subcommand("report", "render tables");
  report->require_subcommand(1);
  std::vector<std::string> r_inputs;
  std::string r_csv, r_text, r_ledger, r_out;
  auto* r_detection = report->add_subcommand("detection", "per-benchmark table");
  r_detection->add_option("--reports", r_inputs)->required();
  auto* r_robust = report->add_subcommand("robustness", "perturbation grid table");
  r_robust->add_option("--sweeps", r_inputs)->required();
  for (auto* cmd : {r_detection, r_robust}) {
    cmd->add_option("--csv", r_csv, "CSV output path");
    cmd->add_option("--text", r_text, "text output path (default stdout)");
  }
  auto* r_series = report->add_subcommand("series", "scaling series CSV");
  r_series->add_option("--ledger", r_ledger)->required();
  r_series->add_option("--out", r_out);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "robustness sweep");
  std::string s_manifest, s_backend = "baseline", s_grid = "standard", s_out,
                          s_work_dir, s_mask_dir;
  std::uint64_t s_seed = 42, s_noise_seed = 0;
  sweep->add_option("--manifest", s_manifest)->required();
  sweep->add_option("--backend", s_backend);
  sweep->add_option("--grid", s_grid, "'standard' or kind:strength,...");
  sweep->add_option("--seed", s_seed, "decode seed");
  sweep->add_option("--noise-seed", s_noise_seed);
  sweep->add_option("--work-dir", s_work_dir);
  sweep->add_option("--mask-dir", s_mask_dir);
  sweep->add_option("--out", s_out);

  // backend
  auto* backend = app.add_subcommand("backend", "serve a built-in backend");
  std::string b_kind, b_config, b_mask_dir;
  int b_port = -1;
  backend->add_option("kind", b_kind, "mock or baseline")
      ->required()
      ->check(CLI::IsMember({"mock", "baseline"}));
  backend->add_option("--config", b_config, "mock configuration");
  backend->add_option("--mask-dir", b_mask_dir);
  backend->add_option("--listen", b_port, "serve TCP on this port instead of stdio");

  // templates
  auto* templates = app.add_subcommand("templates", "VQA templates");
  templates->require_subcommand(1);
  auto* t_list = templates->add_subcommand("list", "print the table");
  auto* t_render = templates->add_subcommand("render", "render one pair");
  int t_id = 0;
  std::string t_label = "tampered";
  t_render->add_option("--id", t_id)->required();
  t_render->add_option("--label", t_label)
      ->check(CLI::IsMember({"tampered", "authentic"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*perturb) {
      fidl::PerturbationSpec spec{fidl::ParseKind(p_kind), p_strength, p_seed};
      fidl::WriteImage(p_out, fidl::Apply(fidl::ReadImage(p_in), spec));
    } else if (*eval_run) {
      Emit(run_args.out, fidl::ReportToJson(RunEval(run_args, false)));
    } else if (*eval_loc) {
      Emit(loc_args.out, fidl::ReportToJson(RunEval(loc_args, true)));
    } else if (*eval_delta) {
      const auto table = fidl::SupervisionDelta(fidl::ReadReport(d_before),
                                                fidl::ReadReport(d_after));
      std::string csv = "benchmark,before,after,gain_points\r\n";
      char buf[128];
      for (const auto& row : table.rows) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g\r\n", row.before,
                      row.after, row.gain_points);
        csv += row.benchmark + buf;
      }
      std::snprintf(buf, sizeof(buf), "average,,,%.17g\r\n",
                    table.average_gain_points);
      Emit(d_out, csv + buf);
    } else if (*c_sample) {
      const auto loaded = fidl::LoadManifest(cs_manifest);
      fidl::LoadedManifest out;
      out.records = fidl::BalancedSample(loaded.records, ParseWeights(cs_weights),
                                         cs_n, cs_seed);
      // Draws are with replacement; suffix ids to keep them unique.
      for (std::size_t i = 0; i < out.records.size(); ++i) {
        out.records[i].id += "#" + std::to_string(i);
      }
      if (cs_out.empty()) cs_out = "/dev/stdout";
      fidl::WriteManifest(cs_out, out);
    } else if (*c_recompose) {
      auto loaded = fidl::LoadManifest(cr_manifest);
      loaded.mixture =
          fidl::Recompose(loaded.mixture, LoadMetrics(cr_metrics), cr_floor);
      if (cr_out.empty()) cr_out = "/dev/stdout";
      fidl::WriteManifest(cr_out, loaded);
    } else if (*c_ledger) {
      fidl::Ledger ledger(cl_ledger);
      if (!cl_run.empty()) {
        std::string line = ReadAll(cl_run);
        line = json::parse(line).dump();
        ledger.Record(fidl::ScalingRunFromJsonLine(line, 1));
      }
      for (const auto& run : ledger.runs()) {
        std::cout << fidl::ScalingRunToJsonLine(run) << "\n";
      }
    } else if (*c_mine) {
      Emit(cm_out, fidl::PlansToJson(
                       fidl::MineBadcases(fidl::ReadReport(cm_report), cm_k)));
    } else if (*r_detection || *r_robust) {
      fidl::TableDocument doc;
      if (*r_detection) {
        std::vector<fidl::EvalReport> reports;
        for (const auto& p : r_inputs) reports.push_back(fidl::ReadReport(p));
        doc = fidl::RenderDetectionTable(reports);
      } else {
        std::vector<fidl::RobustnessReport> sweeps;
        for (const auto& p : r_inputs) sweeps.push_back(fidl::ReadRobustness(p));
        doc = fidl::RenderRobustnessTable(sweeps);
      }
      if (!r_csv.empty()) fidl::WriteText(r_csv, doc.ToCsv());
      Emit(r_text, doc.ToText());
    } else if (*r_series) {
      fidl::Ledger ledger(r_ledger);
      Emit(r_out, fidl::EmitSeries(ledger.runs()));
    } else if (*sweep) {
      std::vector<fidl::PerturbationSpec> grid;
      if (s_grid == "standard") {
        grid = fidl::StandardGrid(s_noise_seed);
      } else {
        std::stringstream ss(s_grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
          auto spec = fidl::ParseSpec(item);
          spec.rng_seed = s_noise_seed;
          grid.push_back(spec);
        }
      }
      auto be = fidl::MakeBackend(s_backend, s_mask_dir);
      fidl::SweepOptions options;
      options.decode.seed = s_seed;
      options.work_dir = s_work_dir;
      try {
        Emit(s_out, fidl::RobustnessToJson(
                        fidl::RobustnessSweep(s_manifest, *be, grid, options)));
      } catch (const fidl::PartialReportError& e) {
        Emit(s_out, fidl::RobustnessToJson(e.partial()));
        throw;
      }
    } else if (*backend) {
      std::unique_ptr<fidl::Backend> be;
      if (b_kind == "mock") {
        fidl::MockConfig config;
        if (!b_config.empty()) config = fidl::LoadMockConfig(b_config);
        if (!b_mask_dir.empty()) config.mask_dir = b_mask_dir;
        be = std::make_unique<fidl::MockBackend>(config);
      } else {
        be = std::make_unique<fidl::BaselineBackend>(b_mask_dir);
      }
      if (b_port >= 0) {
        fidl::ServeTcp(*be, b_port, 0, [](int port) {
          std::cerr << "listening on 127.0.0.1:" << port << std::endl;
        });
      } else {
        fidl::ServeFd(*be, 0, 1);
      }
    } else if (*t_list) {
      std::cout << fidl::TemplateTableText();
    } else if (*t_render) {
      const auto label = t_label == "tampered" ? fidl::Decision::kTampered
                                               : fidl::Decision::kAuthentic;
      const auto pair = fidl::Render(t_id, label);
      std::cout << pair.question << "\n" << pair.answer << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "fidl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
