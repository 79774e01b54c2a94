// SPDX-License-Identifier: Apache-2.0
#include "fidl/perturb.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "fidl/error.h"
#include "fidl/rng.h"

namespace fidl {
namespace {

constexpr std::array<double, 5> kSigmaGrid = {0.5, 1.0, 1.5, 2.0, 2.5};
constexpr std::array<double, 5> kFactorGrid = {0.5, 1.0, 1.5, 2.0, 2.5};
constexpr std::array<double, 5> kQualityGrid = {75, 80, 85, 90, 95};
constexpr std::array<double, 5> kNoiseGrid = {0.05, 0.10, 0.15, 0.20, 0.25};
constexpr std::array<double, 5> kResizeGrid = {128, 256, 384, 512, 640};

std::uint8_t ToByte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

[[noreturn]] void RangeError(PerturbationKind kind, double strength,
                             const char* range) {
  throw Error(ErrorKind::kParameter,
              std::string(KindName(kind)) + " strength " +
                  FormatStrength(strength) + " outside legal range " + range);
}

bool IsInteger(double v) { return std::floor(v) == v; }

ImageBuffer GaussianBlur(const ImageBuffer& in, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int w = in.width();
  const int h = in.height();
  constexpr int c = ImageBuffer::kChannels;
  std::vector<double> horizontal(in.data().size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int sx = std::clamp(x + k, 0, w - 1);
          acc += kernel[k + radius] * in.at(sx, y, ch);
        }
        horizontal[(static_cast<std::size_t>(y) * w + x) * c + ch] = acc;
      }
    }
  }
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int sy = std::clamp(y + k, 0, h - 1);
          acc += kernel[k + radius] *
                 horizontal[(static_cast<std::size_t>(sy) * w + x) * c + ch];
        }
        out.at(x, y, ch) = ToByte(acc);
      }
    }
  }
  return out;
}

template <typename Fn>
ImageBuffer MapSamples(const ImageBuffer& in, Fn fn) {
  ImageBuffer out = in;
  for (std::uint8_t& v : out.mutable_data()) v = ToByte(fn(static_cast<double>(v)));
  return out;
}

ImageBuffer Saturation(const ImageBuffer& in, double factor) {
  ImageBuffer out = in;
  auto& d = out.mutable_data();
  for (std::size_t i = 0; i < d.size(); i += ImageBuffer::kChannels) {
    const double r = in.data()[i];
    const double g = in.data()[i + 1];
    const double b = in.data()[i + 2];
    const double gray = 0.299 * r + 0.587 * g + 0.114 * b;
    d[i] = ToByte(gray + factor * (r - gray));
    d[i + 1] = ToByte(gray + factor * (g - gray));
    d[i + 2] = ToByte(gray + factor * (b - gray));
  }
  return out;
}

ImageBuffer Noise(const ImageBuffer& in, double sigma, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const double stddev = sigma * 255.0;
  ImageBuffer out = in;
  for (std::uint8_t& v : out.mutable_data()) {
    v = ToByte(static_cast<double>(v) + stddev * rng.NextGaussian());
  }
  return out;
}

ImageBuffer Resize(const ImageBuffer& in, int target) {
  const int sw = in.width();
  const int sh = in.height();
  ImageBuffer out(target, target);
  const double scale_x = static_cast<double>(sw) / target;
  const double scale_y = static_cast<double>(sh) / target;
  for (int y = 0; y < target; ++y) {
    const double fy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0,
                                 static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target; ++x) {
      const double fx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0,
                                   static_cast<double>(sw - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < ImageBuffer::kChannels; ++ch) {
        const double top =
            in.at(x0, y0, ch) * (1.0 - wx) + in.at(x1, y0, ch) * wx;
        const double bottom =
            in.at(x0, y1, ch) * (1.0 - wx) + in.at(x1, y1, ch) * wx;
        out.at(x, y, ch) = ToByte(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

}  // namespace

std::string_view KindName(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kGaussianBlur: return "gaussian_blur";
    case PerturbationKind::kBrightness: return "brightness";
    case PerturbationKind::kContrast: return "contrast";
    case PerturbationKind::kJpeg: return "jpeg";
    case PerturbationKind::kNoise: return "noise";
    case PerturbationKind::kResize: return "resize";
    case PerturbationKind::kSaturation: return "saturation";
  }
  return "unknown";
}

PerturbationKind ParseKind(std::string_view name) {
  for (PerturbationKind k : kAllPerturbationKinds) {
    if (KindName(k) == name) return k;
  }
  throw Error(ErrorKind::kParameter,
              "unknown perturbation kind '" + std::string(name) + "'");
}

std::string FormatStrength(double strength) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", strength);
  return buf;
}

PerturbationSpec ParseSpec(std::string_view text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorKind::kParameter,
                "perturbation must look like kind:strength, got '" +
                    std::string(text) + "'");
  }
  PerturbationSpec spec;
  spec.kind = ParseKind(text.substr(0, colon));
  const std::string number(text.substr(colon + 1));
  char* end = nullptr;
  spec.strength = std::strtod(number.c_str(), &end);
  if (number.empty() || end != number.c_str() + number.size()) {
    throw Error(ErrorKind::kParameter, "bad strength '" + number + "'");
  }
  ValidateSpec(spec);
  return spec;
}

std::string FormatSpec(const PerturbationSpec& spec) {
  return std::string(KindName(spec.kind)) + ":" + FormatStrength(spec.strength);
}

const std::array<double, 5>& GridStrengths(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kGaussianBlur: return kSigmaGrid;
    case PerturbationKind::kJpeg: return kQualityGrid;
    case PerturbationKind::kNoise: return kNoiseGrid;
    case PerturbationKind::kResize: return kResizeGrid;
    case PerturbationKind::kBrightness:
    case PerturbationKind::kContrast:
    case PerturbationKind::kSaturation:
      return kFactorGrid;
  }
  return kFactorGrid;
}

void ValidateSpec(const PerturbationSpec& spec) {
  const double s = spec.strength;
  switch (spec.kind) {
    case PerturbationKind::kGaussianBlur:
      if (!(s > 0.0 && s <= 10.0)) RangeError(spec.kind, s, "(0, 10]");
      return;
    case PerturbationKind::kBrightness:
    case PerturbationKind::kContrast:
    case PerturbationKind::kSaturation:
      if (!(s > 0.0 && s <= 4.0)) RangeError(spec.kind, s, "(0, 4]");
      return;
    case PerturbationKind::kJpeg:
      if (!(s >= 1.0 && s <= 100.0) || !IsInteger(s)) {
        RangeError(spec.kind, s, "integers in [1, 100]");
      }
      return;
    case PerturbationKind::kNoise:
      if (!(s >= 0.0 && s <= 1.0)) RangeError(spec.kind, s, "[0, 1]");
      return;
    case PerturbationKind::kResize:
      if (!(s >= 16.0 && s <= 4096.0) || !IsInteger(s)) {
        RangeError(spec.kind, s, "integers in [16, 4096]");
      }
      return;
  }
}

ImageBuffer Apply(const ImageBuffer& image, const PerturbationSpec& spec) {
  ValidateSpec(spec);
  const double s = spec.strength;
  switch (spec.kind) {
    case PerturbationKind::kGaussianBlur:
      return GaussianBlur(image, s);
    case PerturbationKind::kBrightness:
      return MapSamples(image, [s](double v) { return v * s; });
    case PerturbationKind::kContrast:
      return MapSamples(image,
                        [s](double v) { return (v - 128.0) * s + 128.0; });
    case PerturbationKind::kJpeg:
      return DecodeJpeg(EncodeJpeg(image, static_cast<int>(s)));
    case PerturbationKind::kNoise:
      return Noise(image, s, spec.rng_seed);
    case PerturbationKind::kResize:
      return Resize(image, static_cast<int>(s));
    case PerturbationKind::kSaturation:
      return Saturation(image, s);
  }
  return image;
}

std::vector<PerturbationSpec> StandardGrid(std::uint64_t noise_seed) {
  std::vector<PerturbationSpec> grid;
  grid.reserve(35);
  for (PerturbationKind kind : kAllPerturbationKinds) {
    for (double strength : GridStrengths(kind)) {
      grid.push_back({kind, strength, noise_seed});
    }
  }
  return grid;
}

double TotalVariation(const ImageBuffer& image) {
  double tv = 0.0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        const int v = image.at(x, y, c);
        if (x + 1 < image.width()) tv += std::abs(image.at(x + 1, y, c) - v);
        if (y + 1 < image.height()) tv += std::abs(image.at(x, y + 1, c) - v);
      }
    }
  }
  return tv;
}

}  // namespace fidl
