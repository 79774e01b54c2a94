// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_ROBUSTNESS_H_
#define FIDL_ROBUSTNESS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fidl/backend.h"
#include "fidl/error.h"
#include "fidl/perturb.h"

namespace fidl {

struct RobustnessCell {
  PerturbationSpec spec;
  // Absent when the cell was not completed.
  std::optional<double> accuracy;
  std::size_t scored = 0;
  std::size_t failed = 0;
};

struct RobustnessReport {
  std::string backend;
  std::string manifest;
  std::uint64_t seed = 42;
  double temperature = 1.0;
  std::vector<RobustnessCell> cells;

  const RobustnessCell* Find(PerturbationKind kind, double strength) const;
  // Mean of the completed cells of `kind`; absent if none completed.
  std::optional<double> KindAverage(PerturbationKind kind) const;
};

// Thrown when the backend fails mid-sweep; carries the completed cells (the
// remaining cells are present without an accuracy).
class PartialReportError : public Error {
 public:
  PartialReportError(const std::string& message, RobustnessReport partial);
  const RobustnessReport& partial() const { return partial_; }

 private:
  RobustnessReport partial_;
};

struct SweepOptions {
  DecodeParams decode;
  int template_id = 0;
  // Perturbed copies are written here; a fresh temporary directory is used
  // when empty.
  std::filesystem::path work_dir;
};

// Detection accuracy (s_tamper > 0.5) of `backend` on the manifest under each
// cell of `grid`. Samples are visited in id order; the noise seed of a sample
// is spec.rng_seed ^ Fnv1a64(id).
RobustnessReport RobustnessSweep(const std::filesystem::path& manifest,
                                 Backend& backend,
                                 const std::vector<PerturbationSpec>& grid,
                                 const SweepOptions& options = {});

std::string RobustnessToJson(const RobustnessReport& report);
RobustnessReport RobustnessFromJson(const std::string& text);
void WriteRobustness(const std::filesystem::path& path,
                     const RobustnessReport& report);
RobustnessReport ReadRobustness(const std::filesystem::path& path);

}  // namespace fidl

#endif  // FIDL_ROBUSTNESS_H_
