// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_IMAGE_H_
#define FIDL_IMAGE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fidl/metrics.h"

namespace fidl {

// Interleaved 8-bit RGB.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  // Throws Error(kInput) unless width, height >= 1 and data has
  // width * height * 3 bytes.
  ImageBuffer(int width, int height, std::vector<std::uint8_t> data);
  ImageBuffer(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& mutable_data() { return data_; }

  std::uint8_t at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  bool operator==(const ImageBuffer&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// PNG or JPEG, detected from the file signature. Grayscale, palette, alpha
// and 16-bit PNGs are converted to 8-bit RGB.
ImageBuffer ReadImage(const std::filesystem::path& path);
// Format chosen by extension: .png, or .jpg/.jpeg (quality 95).
void WriteImage(const std::filesystem::path& path, const ImageBuffer& image);
void WritePng(const std::filesystem::path& path, const ImageBuffer& image);

// Baseline sequential JPEG with 4:2:0 chroma subsampling and the standard
// quantization tables scaled by quality.
std::vector<std::uint8_t> EncodeJpeg(const ImageBuffer& image, int quality);
ImageBuffer DecodeJpeg(const std::vector<std::uint8_t>& bytes);

// Single-channel 8-bit masks (0 = authentic, 255 = forged).
Grid<std::uint8_t> ReadGrayPng(const std::filesystem::path& path);
void WriteGrayPng(const std::filesystem::path& path,
                  const Grid<std::uint8_t>& mask);

// Mask conversions: probability = value / 255, truth = value >= 128.
ProbabilityMask ToProbabilityMask(const Grid<std::uint8_t>& mask);
BinaryMask ToBinaryMask(const Grid<std::uint8_t>& mask);

// Peak signal-to-noise ratio over all channels in dB; +inf when identical.
double Psnr(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace fidl

#endif  // FIDL_IMAGE_H_
