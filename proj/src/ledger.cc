// SPDX-License-Identifier: Apache-2.0
#include "fidl/ledger.h"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fidl/error.h"

namespace fidl {
namespace {

using nlohmann::json;

template <typename T>
json DomainMapToJson(const std::map<Domain, T>& m) {
  json j = json::object();
  for (const auto& [d, v] : m) j[std::string(DomainName(d))] = v;
  return j;
}

template <typename T>
std::map<Domain, T> DomainMapFromJson(const json& j, const char* key,
                                      std::size_t line_no) {
  std::map<Domain, T> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_object()) {
    throw ParseError(line_no, std::string(key) + " must be an object");
  }
  for (const auto& [name, value] : j[key].items()) {
    if (!value.is_number()) {
      throw ParseError(line_no, std::string(key) + "." + name +
                                    " must be a number");
    }
    try {
      out[ParseDomain(name)] = value.template get<T>();
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace

std::uint64_t ScalingRun::DataSize(Domain domain) const {
  std::uint64_t size = 0;
  if (auto it = base_domain_sizes.find(domain); it != base_domain_sizes.end()) {
    size = it->second;
  }
  if (domain == added_domain) size += added_count;
  return size;
}

double RelativeGain(double base, double updated) {
  if (base == 0.0 || !std::isfinite(base) || !std::isfinite(updated)) {
    throw Error(ErrorKind::kDomain,
                "relative gain needs a finite, nonzero base metric");
  }
  return 100.0 * (updated - base) / base;
}

ScalingRun VerifyGains(ScalingRun run) {
  std::map<Domain, double> gains;
  for (const auto& [d, value] : run.per_domain_metric) {
    const auto base = run.base_metric.find(d);
    if (base == run.base_metric.end()) {
      throw Error(ErrorKind::kConsistency,
                  "run " + run.run_id + ": no base metric for " +
                      std::string(DomainName(d)));
    }
    gains[d] = RelativeGain(base->second, value);
  }
  for (const auto& [d, stored] : run.relative_gain) {
    const auto it = gains.find(d);
    if (it == gains.end() || !(std::abs(it->second - stored) <= kGainTolerance)) {
      throw Error(ErrorKind::kConsistency,
                  "run " + run.run_id + ": stored gain for " +
                      std::string(DomainName(d)) + " (" +
                      std::to_string(stored) + ") does not match metrics");
    }
  }
  run.relative_gain = std::move(gains);
  return run;
}

std::string ScalingRunToJsonLine(const ScalingRun& run) {
  json j;
  j["run_id"] = run.run_id;
  j["base_manifest"] = run.base_manifest;
  j["added"] = {{"domain", std::string(DomainName(run.added_domain))},
                {"count", run.added_count}};
  j["base_domain_sizes"] = DomainMapToJson(run.base_domain_sizes);
  j["base_metric"] = DomainMapToJson(run.base_metric);
  j["per_domain_metric"] = DomainMapToJson(run.per_domain_metric);
  j["relative_gain"] = DomainMapToJson(run.relative_gain);
  return j.dump();
}

ScalingRun ScalingRunFromJsonLine(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
  if (!j.is_object() || !j.contains("run_id") || !j["run_id"].is_string()) {
    throw ParseError(line_no, "ledger line needs a string run_id");
  }
  ScalingRun run;
  run.run_id = j["run_id"].get<std::string>();
  run.base_manifest = j.value("base_manifest", "");
  if (j.contains("added")) {
    const json& added = j["added"];
    try {
      run.added_domain = ParseDomain(added.at("domain").get<std::string>());
      run.added_count = added.at("count").get<std::uint64_t>();
    } catch (const std::exception& e) {
      throw ParseError(line_no, std::string("bad 'added': ") + e.what());
    }
  }
  run.base_domain_sizes =
      DomainMapFromJson<std::uint64_t>(j, "base_domain_sizes", line_no);
  run.base_metric = DomainMapFromJson<double>(j, "base_metric", line_no);
  run.per_domain_metric =
      DomainMapFromJson<double>(j, "per_domain_metric", line_no);
  run.relative_gain = DomainMapFromJson<double>(j, "relative_gain", line_no);
  return run;
}

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ScalingRun run = VerifyGains(ScalingRunFromJsonLine(line, line_no));
    for (const auto& existing : runs_) {
      if (existing.run_id == run.run_id) {
        throw Error(ErrorKind::kIntegrity, "line " + std::to_string(line_no) +
                                               ": duplicate run_id '" +
                                               run.run_id + "'");
      }
    }
    runs_.push_back(std::move(run));
  }
}

const ScalingRun& Ledger::Record(ScalingRun run) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& existing : runs_) {
    if (existing.run_id == run.run_id) {
      throw Error(ErrorKind::kIntegrity,
                  "duplicate run_id '" + run.run_id + "'");
    }
  }
  run = VerifyGains(std::move(run));
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot append to " + path_.string());
  out << ScalingRunToJsonLine(run) << "\n";
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write to " + path_.string() + " failed");
  runs_.push_back(std::move(run));
  return runs_.back();
}

}  // namespace fidl
