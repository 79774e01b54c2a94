// SPDX-License-Identifier: Apache-2.0
#include "fidl/image.h"

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "fidl/error.h"

namespace fidl {
namespace {

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void JpegSilence(j_common_ptr, int) {}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open image " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

bool HasPngSignature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

bool HasJpegSignature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 &&
         bytes[2] == 0xFF;
}

// Decodes a PNG from memory into the requested simplified-API format.
std::vector<std::uint8_t> DecodePng(const std::vector<std::uint8_t>& bytes,
                                    png_uint_32 format, int* width,
                                    int* height, const std::string& what) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::kCodec, what + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::kCodec, what + ": " + image.message);
  }
  *width = static_cast<int>(image.width);
  *height = static_cast<int>(image.height);
  return pixels;
}

void EncodePngFile(const std::filesystem::path& path, png_uint_32 format,
                   int width, int height, const std::uint8_t* pixels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels, 0, nullptr)) {
    throw Error(ErrorKind::kIo, "cannot write " + path.string() + ": " +
                                    image.message);
  }
}

std::string Lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::kInput, "image dimensions must be >= 1");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorKind::kInput, "image data length does not match " +
                                       std::to_string(width) + "x" +
                                       std::to_string(height) + "x3");
  }
}

ImageBuffer::ImageBuffer(int width, int height, std::uint8_t fill)
    : ImageBuffer(width, height,
                  std::vector<std::uint8_t>(
                      static_cast<std::size_t>(std::max(width, 0)) *
                          std::max(height, 0) * kChannels,
                      fill)) {}

ImageBuffer ReadImage(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  if (HasPngSignature(bytes)) {
    int w = 0;
    int h = 0;
    auto pixels = DecodePng(bytes, PNG_FORMAT_RGB, &w, &h, path.string());
    return ImageBuffer(w, h, std::move(pixels));
  }
  if (HasJpegSignature(bytes)) return DecodeJpeg(bytes);
  throw Error(ErrorKind::kInput, path.string() + " is neither PNG nor JPEG");
}

void WritePng(const std::filesystem::path& path, const ImageBuffer& image) {
  EncodePngFile(path, PNG_FORMAT_RGB, image.width(), image.height(),
                image.data().data());
}

void WriteImage(const std::filesystem::path& path, const ImageBuffer& image) {
  const std::string ext = Lowercase(path.extension().string());
  if (ext == ".png") {
    WritePng(path, image);
  } else if (ext == ".jpg" || ext == ".jpeg") {
    const auto bytes = EncodeJpeg(image, 95);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  } else {
    throw Error(ErrorKind::kIo, "unsupported output extension '" + ext + "'");
  }
}

std::vector<std::uint8_t> EncodeJpeg(const ImageBuffer& image, int quality) {
  if (quality < 1 || quality > 100) {
    throw Error(ErrorKind::kParameter, "jpeg quality must be in [1, 100]");
  }
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  std::vector<std::uint8_t> out;

  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = JpegErrorExit;
  err.base.emit_message = JpegSilence;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(ErrorKind::kCodec, std::string("jpeg encode: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width());
  cinfo.image_height = static_cast<JDIMENSION>(image.height());
  cinfo.input_components = ImageBuffer::kChannels;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  // 4:2:0: luma sampled 2x2 relative to both chroma planes.
  cinfo.comp_info[0].h_samp_factor = 2;
  cinfo.comp_info[0].v_samp_factor = 2;
  cinfo.comp_info[1].h_samp_factor = 1;
  cinfo.comp_info[1].v_samp_factor = 1;
  cinfo.comp_info[2].h_samp_factor = 1;
  cinfo.comp_info[2].v_samp_factor = 1;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride =
      static_cast<std::size_t>(image.width()) * ImageBuffer::kChannels;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(image.data().data() +
                                        cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  out.assign(buffer, buffer + size);
  std::free(buffer);
  return out;
}

ImageBuffer DecodeJpeg(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;

  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = JpegErrorExit;
  err.base.emit_message = JpegSilence;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorKind::kCodec, std::string("jpeg decode: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  const std::size_t stride =
      static_cast<std::size_t>(width) * ImageBuffer::kChannels;
  pixels.resize(stride * height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return ImageBuffer(width, height, std::move(pixels));
}

Grid<std::uint8_t> ReadGrayPng(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  if (!HasPngSignature(bytes)) {
    throw Error(ErrorKind::kInput, path.string() + " is not a PNG mask");
  }
  int w = 0;
  int h = 0;
  auto pixels = DecodePng(bytes, PNG_FORMAT_GRAY, &w, &h, path.string());
  Grid<std::uint8_t> mask;
  mask.height = static_cast<std::size_t>(h);
  mask.width = static_cast<std::size_t>(w);
  mask.data = std::move(pixels);
  return mask;
}

void WriteGrayPng(const std::filesystem::path& path,
                  const Grid<std::uint8_t>& mask) {
  if (mask.width == 0 || mask.height == 0 ||
      mask.data.size() != mask.width * mask.height) {
    throw Error(ErrorKind::kInput, "invalid mask grid for " + path.string());
  }
  EncodePngFile(path, PNG_FORMAT_GRAY, static_cast<int>(mask.width),
                static_cast<int>(mask.height), mask.data.data());
}

ProbabilityMask ToProbabilityMask(const Grid<std::uint8_t>& mask) {
  ProbabilityMask out(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    out.data[i] = mask.data[i] / 255.0;
  }
  return out;
}

BinaryMask ToBinaryMask(const Grid<std::uint8_t>& mask) {
  BinaryMask out(mask.height, mask.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    out.data[i] = mask.data[i] >= 128 ? 1 : 0;
  }
  return out;
}

double Psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(a.height(), a.width(), b.height(), b.width());
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.data().size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace fidl
