// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_DATA_COMPOSE_H_
#define FIDL_DATA_COMPOSE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fidl/vocab_scorer.h"

namespace fidl {

enum class Domain { kDeepfake, kAigc, kDocument, kNature };

inline constexpr std::array<Domain, 4> kAllDomains = {
    Domain::kDeepfake, Domain::kAigc, Domain::kDocument, Domain::kNature};

std::string_view DomainName(Domain domain);
Domain ParseDomain(std::string_view name);

// Manipulation mechanism tags.
enum class Operation {
  kSplice,
  kCopyMove,
  kRemoval,
  kInpaint,
  kGenerativeEdit,
  kFaceSwap,
  kFaceReenact,
  kTextEdit,
  kSealEdit,
  kFullSynthesis,
};

std::string_view OperationName(Operation op);
Operation ParseOperation(std::string_view name);

struct SampleRecord {
  std::string id;
  std::string image_ref;
  Decision label = Decision::kAuthentic;
  std::optional<std::string> mask_ref;
  Domain domain = Domain::kNature;
  std::optional<Operation> operation;
  std::string source;
};

struct MixtureEntry {
  std::string source;
  Domain domain = Domain::kNature;
  std::uint64_t count = 0;
  double weight = 0.0;
};

struct MixtureManifest {
  std::string name;
  std::vector<MixtureEntry> entries;
  std::uint64_t total = 0;
  // Per-domain totals as published alongside the composition, when the
  // manifest carries them (metadata only).
  std::map<Domain, std::uint64_t> declared_domain_totals;
  // Free-form key/value metadata (e.g. stage splits).
  std::map<std::string, std::string> metadata;

  // Sum of entry counts per domain.
  std::map<Domain, std::uint64_t> DomainCounts() const;
  // Sum of entry weights per domain.
  std::map<Domain, double> DomainWeights() const;
};

struct LoadedManifest {
  MixtureManifest mixture;
  std::vector<SampleRecord> records;
};

// Manifest JSONL. Each line is one SampleRecord object; optionally the first
// line is {"mixture": {...}} describing the composition. Without a mixture
// line the composition is derived from the records. Relative image_ref and
// mask_ref paths are resolved against the manifest's directory. All-or-
// nothing: throws ParseError (line-numbered) or Error(kIntegrity).
LoadedManifest LoadManifest(const std::filesystem::path& path);

// Writes the mixture header (if it has entries) and one line per record.
void WriteManifest(const std::filesystem::path& path,
                   const LoadedManifest& manifest);

// Checks weights >= 0, sum 1 within 1e-9, total = sum of counts.
void ValidateMixture(const MixtureManifest& mixture);

// Weighted domain sampling with replacement. For each draw: u = NextDouble()
// picks the domain through the cumulative weights (in Domain order), then
// NextBelow(size) picks a record within it (input order).
std::vector<SampleRecord> BalancedSample(
    const std::vector<SampleRecord>& records,
    const std::map<Domain, double>& weights, std::size_t n,
    std::uint64_t seed);

// Equal weight on the four domains.
std::map<Domain, double> UniformDomainWeights();

// Recomposition rule (see docs/recompose.md): domains whose metric is below
// `floor` get their weight multiplied by floor / max(metric, 1e-3); the
// result is renormalized, and any domain that would fall below half of its
// base weight is pinned at that bound while the rest is renormalized again.
// Domains without a metric are treated as healthy.
MixtureManifest Recompose(const MixtureManifest& base,
                          const std::map<Domain, double>& per_domain_metric,
                          double floor);

inline constexpr double kRecomposeMinShare = 0.5;
inline constexpr double kRecomposeMetricFloor = 1e-3;

}  // namespace fidl

#endif  // FIDL_DATA_COMPOSE_H_
