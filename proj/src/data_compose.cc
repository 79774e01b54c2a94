// SPDX-License-Identifier: Apache-2.0
#include "fidl/data_compose.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "fidl/error.h"
#include "fidl/image.h"
#include "fidl/rng.h"

namespace fidl {
namespace {

using nlohmann::json;

constexpr double kWeightTolerance = 1e-9;

std::string RequireString(const json& obj, const char* key,
                          std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line_no, std::string("missing or non-string field '") +
                                  key + "'");
  }
  return it->get<std::string>();
}

std::optional<std::string> OptionalString(const json& obj, const char* key,
                                          std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(line_no, std::string("field '") + key +
                                  "' must be a string or null");
  }
  return it->get<std::string>();
}

Decision ParseLabel(const json& value, std::size_t line_no) {
  if (value.is_number_integer()) {
    const auto v = value.get<long long>();
    if (v == 1) return Decision::kTampered;
    if (v == 0) return Decision::kAuthentic;
  } else if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "tampered") return Decision::kTampered;
    if (s == "authentic") return Decision::kAuthentic;
  }
  throw ParseError(line_no,
                   "label must be 0/1 or \"authentic\"/\"tampered\"");
}

std::string ResolveRef(const std::filesystem::path& base_dir,
                       const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (base_dir / p).lexically_normal().string();
}

SampleRecord ParseRecord(const json& obj, std::size_t line_no,
                         const std::filesystem::path& base_dir) {
  if (!obj.is_object()) throw ParseError(line_no, "record must be an object");
  SampleRecord r;
  r.id = RequireString(obj, "id", line_no);
  if (r.id.empty()) throw ParseError(line_no, "empty id");
  r.image_ref = ResolveRef(base_dir, RequireString(obj, "image_ref", line_no));
  const auto label = obj.find("label");
  if (label == obj.end()) throw ParseError(line_no, "missing field 'label'");
  r.label = ParseLabel(*label, line_no);
  if (auto mask = OptionalString(obj, "mask_ref", line_no)) {
    r.mask_ref = ResolveRef(base_dir, *mask);
  }
  try {
    r.domain = ParseDomain(RequireString(obj, "domain", line_no));
    if (auto op = OptionalString(obj, "operation", line_no)) {
      r.operation = ParseOperation(*op);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line_no, e.what());
  }
  r.source = OptionalString(obj, "source", line_no).value_or("");
  return r;
}

MixtureManifest ParseMixture(const json& obj, std::size_t line_no) {
  if (!obj.is_object()) throw ParseError(line_no, "mixture must be an object");
  MixtureManifest m;
  m.name = obj.value("name", "");
  const auto entries = obj.find("entries");
  if (entries != obj.end()) {
    if (!entries->is_array()) throw ParseError(line_no, "entries must be a list");
    for (const json& e : *entries) {
      MixtureEntry entry;
      entry.source = RequireString(e, "source", line_no);
      try {
        entry.domain = ParseDomain(RequireString(e, "domain", line_no));
      } catch (const ParseError&) {
        throw;
      } catch (const Error& err) {
        throw ParseError(line_no, err.what());
      }
      if (!e.contains("count") || !e["count"].is_number_unsigned()) {
        throw ParseError(line_no, "entry count must be a nonnegative integer");
      }
      entry.count = e["count"].get<std::uint64_t>();
      m.total += entry.count;
      m.entries.push_back(std::move(entry));
    }
    // Weights default to count proportions when omitted.
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const json& e = (*entries)[i];
      if (e.contains("weight")) {
        if (!e["weight"].is_number()) {
          throw ParseError(line_no, "entry weight must be a number");
        }
        m.entries[i].weight = e["weight"].get<double>();
      } else {
        m.entries[i].weight =
            m.total == 0 ? 0.0
                         : static_cast<double>(m.entries[i].count) / m.total;
      }
    }
  }
  if (obj.contains("total")) {
    if (!obj["total"].is_number_unsigned() ||
        obj["total"].get<std::uint64_t>() != m.total) {
      throw Error(ErrorKind::kIntegrity,
                  "line " + std::to_string(line_no) +
                      ": declared total does not equal the sum of counts");
    }
  }
  if (obj.contains("declared_domain_totals")) {
    for (const auto& [key, value] : obj["declared_domain_totals"].items()) {
      if (!value.is_number_unsigned()) {
        throw ParseError(line_no, "declared domain totals must be integers");
      }
      try {
        m.declared_domain_totals[ParseDomain(key)] = value.get<std::uint64_t>();
      } catch (const Error& err) {
        throw ParseError(line_no, err.what());
      }
    }
  }
  if (obj.contains("metadata")) {
    for (const auto& [key, value] : obj["metadata"].items()) {
      m.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  return m;
}

MixtureManifest DeriveMixture(const std::string& name,
                              const std::vector<SampleRecord>& records) {
  std::map<std::pair<Domain, std::string>, std::uint64_t> counts;
  for (const auto& r : records) ++counts[{r.domain, r.source}];
  MixtureManifest m;
  m.name = name;
  m.total = records.size();
  for (const auto& [key, count] : counts) {
    m.entries.push_back({key.second, key.first, count,
                         static_cast<double>(count) / m.total});
  }
  return m;
}

bool MaskIsEmpty(const std::string& path) {
  const auto mask = ReadGrayPng(path);
  return std::all_of(mask.data.begin(), mask.data.end(),
                     [](std::uint8_t v) { return v == 0; });
}

json RecordToJson(const SampleRecord& r) {
  json j;
  j["id"] = r.id;
  j["image_ref"] = r.image_ref;
  j["label"] = r.label == Decision::kTampered ? 1 : 0;
  j["mask_ref"] = r.mask_ref ? json(*r.mask_ref) : json(nullptr);
  j["domain"] = std::string(DomainName(r.domain));
  j["operation"] = r.operation ? json(std::string(OperationName(*r.operation)))
                               : json(nullptr);
  j["source"] = r.source;
  return j;
}

}  // namespace

std::string_view DomainName(Domain domain) {
  switch (domain) {
    case Domain::kDeepfake: return "deepfake";
    case Domain::kAigc: return "aigc";
    case Domain::kDocument: return "document";
    case Domain::kNature: return "nature";
  }
  return "unknown";
}

Domain ParseDomain(std::string_view name) {
  for (Domain d : kAllDomains) {
    if (DomainName(d) == name) return d;
  }
  throw Error(ErrorKind::kDomain, "unknown domain '" + std::string(name) + "'");
}

std::string_view OperationName(Operation op) {
  switch (op) {
    case Operation::kSplice: return "splice";
    case Operation::kCopyMove: return "copy_move";
    case Operation::kRemoval: return "removal";
    case Operation::kInpaint: return "inpaint";
    case Operation::kGenerativeEdit: return "generative_edit";
    case Operation::kFaceSwap: return "face_swap";
    case Operation::kFaceReenact: return "face_reenact";
    case Operation::kTextEdit: return "text_edit";
    case Operation::kSealEdit: return "seal_edit";
    case Operation::kFullSynthesis: return "full_synthesis";
  }
  return "unknown";
}

Operation ParseOperation(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Operation::kFullSynthesis); ++i) {
    const auto op = static_cast<Operation>(i);
    if (OperationName(op) == name) return op;
  }
  throw Error(ErrorKind::kDomain,
              "unknown operation tag '" + std::string(name) + "'");
}

std::map<Domain, std::uint64_t> MixtureManifest::DomainCounts() const {
  std::map<Domain, std::uint64_t> out;
  for (const auto& e : entries) out[e.domain] += e.count;
  return out;
}

std::map<Domain, double> MixtureManifest::DomainWeights() const {
  std::map<Domain, double> out;
  for (const auto& e : entries) out[e.domain] += e.weight;
  return out;
}

void ValidateMixture(const MixtureManifest& mixture) {
  std::uint64_t total = 0;
  double weight_sum = 0.0;
  for (const auto& e : mixture.entries) {
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorKind::kIntegrity,
                  "negative or non-finite weight for source '" + e.source + "'");
    }
    weight_sum += e.weight;
    total += e.count;
  }
  if (total != mixture.total) {
    throw Error(ErrorKind::kIntegrity, "total " + std::to_string(mixture.total) +
                                           " != sum of counts " +
                                           std::to_string(total));
  }
  if (!mixture.entries.empty() &&
      std::abs(weight_sum - 1.0) > kWeightTolerance) {
    throw Error(ErrorKind::kIntegrity,
                "mixture weights sum to " + std::to_string(weight_sum));
  }
}

LoadedManifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  const std::filesystem::path base_dir = path.parent_path();

  LoadedManifest out;
  std::optional<MixtureManifest> declared;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (obj.is_object() && obj.contains("mixture")) {
      if (declared || !out.records.empty()) {
        throw ParseError(line_no, "mixture header must be the first line");
      }
      declared = ParseMixture(obj["mixture"], line_no);
      continue;
    }
    SampleRecord r = ParseRecord(obj, line_no, base_dir);
    if (!seen.insert(r.id).second) {
      throw Error(ErrorKind::kIntegrity, "line " + std::to_string(line_no) +
                                             ": duplicate id '" + r.id + "'");
    }
    if (r.label == Decision::kAuthentic && r.mask_ref) {
      bool empty = false;
      try {
        empty = MaskIsEmpty(*r.mask_ref);
      } catch (const Error& e) {
        throw Error(ErrorKind::kIntegrity,
                    "line " + std::to_string(line_no) +
                        ": cannot verify authentic mask: " + e.what());
      }
      if (!empty) {
        throw Error(ErrorKind::kIntegrity,
                    "line " + std::to_string(line_no) + ": authentic record '" +
                        r.id + "' has a nonzero mask");
      }
    }
    out.records.push_back(std::move(r));
  }
  if (declared) {
    out.mixture = std::move(*declared);
    if (out.mixture.name.empty()) out.mixture.name = path.stem().string();
  } else {
    out.mixture = DeriveMixture(path.stem().string(), out.records);
  }
  ValidateMixture(out.mixture);
  return out;
}

void WriteManifest(const std::filesystem::path& path,
                   const LoadedManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const MixtureManifest& m = manifest.mixture;
  if (!m.entries.empty() || !m.metadata.empty() ||
      !m.declared_domain_totals.empty()) {
    json mix;
    mix["name"] = m.name;
    mix["total"] = m.total;
    json entries = json::array();
    for (const auto& e : m.entries) {
      entries.push_back({{"source", e.source},
                         {"domain", std::string(DomainName(e.domain))},
                         {"count", e.count},
                         {"weight", e.weight}});
    }
    mix["entries"] = entries;
    if (!m.declared_domain_totals.empty()) {
      json totals = json::object();
      for (const auto& [d, c] : m.declared_domain_totals) {
        totals[std::string(DomainName(d))] = c;
      }
      mix["declared_domain_totals"] = totals;
    }
    if (!m.metadata.empty()) mix["metadata"] = m.metadata;
    out << json{{"mixture", mix}}.dump() << "\n";
  }
  for (const auto& r : manifest.records) out << RecordToJson(r).dump() << "\n";
}

std::map<Domain, double> UniformDomainWeights() {
  std::map<Domain, double> w;
  for (Domain d : kAllDomains) w[d] = 0.25;
  return w;
}

std::vector<SampleRecord> BalancedSample(
    const std::vector<SampleRecord>& records,
    const std::map<Domain, double>& weights, std::size_t n,
    std::uint64_t seed) {
  double sum = 0.0;
  for (const auto& [d, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kDomain, "negative weight for domain " +
                                          std::string(DomainName(d)));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightTolerance) {
    throw Error(ErrorKind::kDomain,
                "domain weights must sum to 1, got " + std::to_string(sum));
  }

  std::map<Domain, std::vector<const SampleRecord*>> pools;
  for (const auto& r : records) pools[r.domain].push_back(&r);

  struct Bucket {
    double upper;
    const std::vector<const SampleRecord*>* pool;
  };
  std::vector<Bucket> buckets;
  double cumulative = 0.0;
  for (Domain d : kAllDomains) {
    const auto it = weights.find(d);
    if (it == weights.end() || it->second == 0.0) continue;
    const auto pool = pools.find(d);
    if (pool == pools.end() || pool->second.empty()) {
      throw Error(ErrorKind::kUnsatisfiableMixture,
                  "domain " + std::string(DomainName(d)) +
                      " has positive weight but no records");
    }
    cumulative += it->second;
    buckets.push_back({cumulative, &pool->second});
  }

  std::vector<SampleRecord> out;
  out.reserve(n);
  if (n == 0) return out;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.NextDouble() * cumulative;
    auto bucket = std::find_if(buckets.begin(), buckets.end(),
                               [u](const Bucket& b) { return u < b.upper; });
    if (bucket == buckets.end()) bucket = std::prev(buckets.end());
    const auto& pool = *bucket->pool;
    out.push_back(*pool[rng.NextBelow(pool.size())]);
  }
  return out;
}

MixtureManifest Recompose(const MixtureManifest& base,
                          const std::map<Domain, double>& per_domain_metric,
                          double floor) {
  if (!(floor > 0.0 && floor < 1.0)) {
    throw Error(ErrorKind::kDomain, "floor must be in (0, 1)");
  }
  for (const auto& [d, m] : per_domain_metric) {
    if (!(m >= 0.0 && m <= 1.0)) {
      throw Error(ErrorKind::kDomain, "metric for " +
                                          std::string(DomainName(d)) +
                                          " outside [0, 1]");
    }
  }
  const std::map<Domain, double> base_weights = base.DomainWeights();
  double base_total = 0.0;
  for (const auto& [d, w] : base_weights) base_total += w;
  if (!(base_total > 0.0)) {
    throw Error(ErrorKind::kDegenerate, "base mixture has no weight to move");
  }

  std::map<Domain, double> boost;
  bool any_weak = false;
  for (const auto& [d, w] : base_weights) {
    const auto it = per_domain_metric.find(d);
    double b = 1.0;
    if (it != per_domain_metric.end() && it->second < floor) {
      b = floor / std::max(it->second, kRecomposeMetricFloor);
      any_weak = any_weak || w > 0.0;
    }
    boost[d] = b;
  }
  if (!any_weak) return base;

  // Proportional renormalization with a lower bound of half the base weight,
  // resolved by fixing violators at the bound until none remain.
  std::map<Domain, double> result;
  std::set<Domain> pinned;
  for (;;) {
    double remaining = 1.0;
    double mass = 0.0;
    for (const auto& [d, w] : base_weights) {
      if (pinned.count(d)) {
        remaining -= kRecomposeMinShare * w / base_total;
      } else {
        mass += w * boost[d];
      }
    }
    bool violated = false;
    for (const auto& [d, w] : base_weights) {
      if (pinned.count(d)) {
        result[d] = kRecomposeMinShare * w / base_total;
        continue;
      }
      result[d] = remaining * w * boost[d] / mass;
      if (result[d] < kRecomposeMinShare * w / base_total) {
        pinned.insert(d);
        violated = true;
      }
    }
    if (!violated) break;
  }

  MixtureManifest out = base;
  out.name = base.name + "-recomposed";
  for (auto& e : out.entries) {
    const double w = base_weights.at(e.domain);
    e.weight = w > 0.0 ? e.weight * result.at(e.domain) / w : 0.0;
  }
  return out;
}

}  // namespace fidl
