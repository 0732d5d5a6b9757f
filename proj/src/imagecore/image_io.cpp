#include "histobench/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace histobench {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) {
      std::fclose(f);
    }
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  return f;
}

enum class Container { kPng, kJpeg, kUnknown };

Container sniff(std::FILE* f) {
  std::array<unsigned char, 8> sig{};
  const std::size_t n = std::fread(sig.data(), 1, sig.size(), f);
  std::rewind(f);
  if (n == 8 && png_sig_cmp(sig.data(), 0, 8) == 0) {
    return Container::kPng;
  }
  if (n >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) {
    return Container::kJpeg;
  }
  return Container::kUnknown;
}

ImageTensor from_rows(const std::vector<std::uint8_t>& rgb, Eigen::Index h, Eigen::Index w) {
  ImageTensor out(h, w);
  float* dst = out.data();
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    dst[i] = static_cast<float>(rgb[i]) / 255.0f;
  }
  return out;
}

ImageTensor read_png(std::FILE* f, const std::string& name) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> rgb;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG '" + name + "'");
  }
  png_init_io(png, f);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) {
    png_set_strip_16(png);
  }
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if ((color & PNG_COLOR_MASK_ALPHA) != 0) {
    png_set_strip_alpha(png);
  }
  // tRNS chunks are ignored: transparency is dropped, not expanded.
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG layout in '" + name + "'");
  }
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_rows(rgb, h, w);
}

struct JpegError {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

ImageTensor read_jpeg(std::FILE* f, const std::string& name) {
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> rgb;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError("corrupt JPEG '" + name + "'");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const auto w = static_cast<std::size_t>(cinfo.output_width);
  const auto h = static_cast<std::size_t>(cinfo.output_height);
  rgb.resize(w * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_rows(rgb, static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
}

} // namespace

std::uint8_t quantize_unit(float v) {
  const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

std::vector<std::uint8_t> to_bytes(const ImageTensor& image) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(image.size()));
  const float* src = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = quantize_unit(src[i]);
  }
  return out;
}

ImageTensor from_bytes(const std::vector<std::uint8_t>& bytes, Eigen::Index height, Eigen::Index width) {
  if (height < 1 || width < 1 || bytes.size() != static_cast<std::size_t>(height * width * 3)) {
    throw ArgumentError("byte buffer length must equal height*width*3");
  }
  return from_rows(bytes, height, width);
}

ImageTensor load_image(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  switch (sniff(f.get())) {
  case Container::kPng:
    return read_png(f.get(), path.string());
  case Container::kJpeg:
    return read_jpeg(f.get(), path.string());
  case Container::kUnknown:
    break;
  }
  throw FormatError("'" + path.string() + "' is neither PNG nor JPEG");
}

void save_image(const ImageTensor& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> rgb = to_bytes(image);
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing '" + path.string() + "'");
  }
  const auto w = static_cast<png_uint_32>(image.width());
  const auto h = static_cast<png_uint_32>(image.height());
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_write_row(png, rgb.data() + static_cast<std::size_t>(y) * w * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

} // namespace histobench
