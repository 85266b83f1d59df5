#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scdr {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

/// Quantization rule for unit-interval values: round-half-up of v*255,
/// clamped to [0, 255]. 0.5 maps to 128.
std::uint8_t quantize_unit(float v);

std::vector<std::uint8_t> encode_gray_png(const GrayImage& image);
void write_gray_png(const std::string& path, const GrayImage& image);

/// Reads the subset this project writes: 8-bit, grayscale, non-interlaced.
GrayImage read_gray_png(const std::string& path);

}  // namespace scdr
