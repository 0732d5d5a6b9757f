#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "histobench/image.hpp"

namespace histobench {

/// Decode a PNG or JPEG (sniffed from the file signature) into [0,1] floats.
/// Grayscale is expanded to three channels, alpha is dropped, 16-bit PNGs are
/// reduced to 8 bits before scaling.
ImageTensor load_image(const std::filesystem::path& path);

/// Write an 8-bit RGB PNG using round-half-up quantization.
void save_image(const ImageTensor& image, const std::filesystem::path& path);

/// round(v·255) with halves rounded up, after clamping into [0,1].
std::uint8_t quantize_unit(float v);

/// Interleaved RGB bytes, row-major.
std::vector<std::uint8_t> to_bytes(const ImageTensor& image);
ImageTensor from_bytes(const std::vector<std::uint8_t>& bytes, Eigen::Index height, Eigen::Index width);

} // namespace histobench
