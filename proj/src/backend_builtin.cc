// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fidl/backend.h"
#include "fidl/error.h"

namespace fidl {
namespace {

double Softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

std::filesystem::path MaskPathFor(const std::filesystem::path& dir,
                                  const std::string& request_id) {
  std::string name = request_id;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return dir / (name + ".png");
}

std::filesystem::path EnsureDir(std::filesystem::path dir) {
  if (dir.empty()) dir = std::filesystem::temp_directory_path() / "fidl-masks";
  std::filesystem::create_directories(dir);
  return dir;
}

// Mean over channels of |I - box3x3(I)| per pixel.
std::vector<double> ResidualMap(const ImageBuffer& image) {
  const int w = image.width();
  const int h = image.height();
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double pixel = 0.0;
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        double box = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            box += image.at(std::clamp(x + dx, 0, w - 1),
                            std::clamp(y + dy, 0, h - 1), c);
          }
        }
        pixel += std::abs(image.at(x, y, c) - box / 9.0);
      }
      out[static_cast<std::size_t>(y) * w + x] = pixel / ImageBuffer::kChannels;
    }
  }
  return out;
}

}  // namespace

LogitVector::Values LogitsForLogOdds(double x) {
  LogitVector::Values v{};
  const double positive = -Softplus(-x);
  const double negative = -Softplus(x);
  for (std::size_t i = 0; i < DetectionVocab::kHalf; ++i) {
    v[i] = positive;
    v[i + DetectionVocab::kHalf] = negative;
  }
  return v;
}

LogitVector::Values LogitsForScore(double s_tamper) {
  if (!(s_tamper >= 0.0 && s_tamper <= 1.0)) {
    throw Error(ErrorKind::kConfig, "mock score " + std::to_string(s_tamper) +
                                        " outside [0, 1]");
  }
  LogitVector::Values v{};
  for (std::size_t i = 0; i < DetectionVocab::kHalf; ++i) {
    v[i] = std::max(std::log(s_tamper), kLogitFloor);
    v[i + DetectionVocab::kHalf] = std::max(std::log1p(-s_tamper), kLogitFloor);
  }
  return v;
}

MockConfig LoadMockConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  MockConfig config;
  try {
    if (j.contains("scores")) {
      for (const auto& [id, s] : j["scores"].items()) {
        config.scores[id] = s.get<double>();
      }
    }
    if (j.contains("masks")) {
      for (const auto& [id, m] : j["masks"].items()) {
        std::filesystem::path p(m.get<std::string>());
        config.masks[id] = (p.is_absolute() ? p : base / p).string();
      }
    }
    config.default_score = j.value("default_score", 0.5);
    if (j.contains("mask_dir")) {
      std::filesystem::path p(j["mask_dir"].get<std::string>());
      config.mask_dir = p.is_absolute() ? p : base / p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  return config;
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  LogitsForScore(config_.default_score);
  for (const auto& [id, s] : config_.scores) {
    try {
      LogitsForScore(s);
    } catch (const Error&) {
      throw Error(ErrorKind::kConfig, "mock score for '" + id + "' is " +
                                          std::to_string(s) +
                                          ", must be in [0, 1]");
    }
  }
  info_.id = "mock";
  info_.capabilities = {"detect", "segment", "token_reduction:exact"};
}

std::vector<DetectOutcome> MockBackend::Detect(
    std::span<const DetectRequest> requests) {
  std::vector<DetectOutcome> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    const auto it = config_.scores.find(req.request_id);
    const double s = it == config_.scores.end() ? config_.default_score
                                                : it->second;
    out.push_back(DetectResponse{req.request_id, LogitsForScore(s)});
  }
  return out;
}

std::vector<SegmentOutcome> MockBackend::Segment(
    std::span<const SegmentRequest> requests) {
  std::vector<SegmentOutcome> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    if (auto it = config_.masks.find(req.request_id); it != config_.masks.end()) {
      out.push_back(SegmentResponse{req.request_id, it->second});
      continue;
    }
    try {
      const ImageBuffer image = ReadImage(req.image_ref);
      const auto dir = EnsureDir(config_.mask_dir);
      const auto path = MaskPathFor(dir, req.request_id);
      WriteGrayPng(path, Grid<std::uint8_t>(image.height(), image.width(), 0));
      out.push_back(SegmentResponse{req.request_id, path.string()});
    } catch (const std::exception& e) {
      out.push_back(ErrorResponse{req.request_id, e.what()});
    }
  }
  return out;
}

BaselineBackend::BaselineBackend(std::filesystem::path mask_dir)
    : mask_dir_(std::move(mask_dir)) {
  info_.id = "baseline";
  info_.capabilities = {"detect", "segment", "token_reduction:exact"};
}

double BaselineBackend::ResidualEnergy(const ImageBuffer& image) {
  const std::vector<double> residual = ResidualMap(image);
  double sum = 0.0;
  for (double r : residual) sum += r;
  return sum / static_cast<double>(residual.size());
}

double BaselineBackend::LogOdds(const ImageBuffer& image) {
  return kGain * (ResidualEnergy(image) / kCalibration - 1.0);
}

Grid<std::uint8_t> BaselineBackend::ResidualMask(const ImageBuffer& image) {
  const int w = image.width();
  const int h = image.height();
  const std::vector<double> residual = ResidualMap(image);
  Grid<std::uint8_t> mask(static_cast<std::size_t>(h),
                          static_cast<std::size_t>(w), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          acc += residual[static_cast<std::size_t>(std::clamp(y + dy, 0, h - 1)) * w +
                          std::clamp(x + dx, 0, w - 1)];
        }
      }
      mask.at(y, x) = acc / 25.0 > kCalibration ? 255 : 0;
    }
  }
  return mask;
}

std::vector<DetectOutcome> BaselineBackend::Detect(
    std::span<const DetectRequest> requests) {
  std::vector<DetectOutcome> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    try {
      const ImageBuffer image = ReadImage(req.image_ref);
      out.push_back(DetectResponse{req.request_id, LogitsForLogOdds(LogOdds(image))});
    } catch (const std::exception& e) {
      out.push_back(ErrorResponse{req.request_id, e.what()});
    }
  }
  return out;
}

std::vector<SegmentOutcome> BaselineBackend::Segment(
    std::span<const SegmentRequest> requests) {
  std::vector<SegmentOutcome> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    try {
      const ImageBuffer image = ReadImage(req.image_ref);
      const auto dir = EnsureDir(mask_dir_);
      const auto path = MaskPathFor(dir, req.request_id);
      WriteGrayPng(path, ResidualMask(image));
      out.push_back(SegmentResponse{req.request_id, path.string()});
    } catch (const std::exception& e) {
      out.push_back(ErrorResponse{req.request_id, e.what()});
    }
  }
  return out;
}

}  // namespace fidl
