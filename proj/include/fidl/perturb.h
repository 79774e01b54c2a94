// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_PERTURB_H_
#define FIDL_PERTURB_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fidl/image.h"

namespace fidl {

// Listed in the order of the robustness table.
enum class PerturbationKind {
  kGaussianBlur,
  kBrightness,
  kContrast,
  kJpeg,
  kNoise,
  kResize,
  kSaturation,
};

inline constexpr std::array<PerturbationKind, 7> kAllPerturbationKinds = {
    PerturbationKind::kGaussianBlur, PerturbationKind::kBrightness,
    PerturbationKind::kContrast,     PerturbationKind::kJpeg,
    PerturbationKind::kNoise,        PerturbationKind::kResize,
    PerturbationKind::kSaturation,
};

std::string_view KindName(PerturbationKind kind);
// Accepts the snake_case names returned by KindName.
PerturbationKind ParseKind(std::string_view name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kBrightness;
  // sigma for blur and noise, factor for brightness/contrast/saturation,
  // quality for jpeg, square target side for resize.
  double strength = 1.0;
  std::uint64_t rng_seed = 0;  // noise only

  bool operator==(const PerturbationSpec&) const = default;
};

// "kind:strength", e.g. "jpeg:75".
PerturbationSpec ParseSpec(std::string_view text);
std::string FormatSpec(const PerturbationSpec& spec);
// Strength printed the way the robustness table prints it ("0.5", "75").
std::string FormatStrength(double strength);

// The five strengths of each kind in the robustness table.
const std::array<double, 5>& GridStrengths(PerturbationKind kind);

// Throws Error(kParameter) naming the kind and its legal range.
void ValidateSpec(const PerturbationSpec& spec);

// Pure function of (image, spec). See docs/perturbations.md for the exact
// definitions.
ImageBuffer Apply(const ImageBuffer& image, const PerturbationSpec& spec);

// The 35 cells, kinds in table order, strengths ascending.
std::vector<PerturbationSpec> StandardGrid(std::uint64_t noise_seed = 0);

// Sum of absolute differences between horizontally and vertically adjacent
// samples, over all channels.
double TotalVariation(const ImageBuffer& image);

}  // namespace fidl

#endif  // FIDL_PERTURB_H_
