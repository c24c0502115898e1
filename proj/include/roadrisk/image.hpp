#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "roadrisk/tensor.hpp"

namespace roadrisk {

/// 8-bit single-channel raster, used for drivable-area label masks
/// (0 = background, 1 = direct lane, 2 = alternative lane).
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;  // row-major

  std::uint8_t at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
};

/// Binary PPM (P6, maxval 255) -> H x W x 3 tensor with values in [0, 1].
/// Throws std::runtime_error on malformed files.
Tensor read_ppm(const std::filesystem::path& path);

/// H x W x 3 tensor, values clamped to [0, 1], written as binary PPM.
void write_ppm(const Tensor& image, const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255). Throws std::runtime_error on malformed files.
Mask read_pgm(const std::filesystem::path& path);
void write_pgm(const Mask& mask, const std::filesystem::path& path);

}  // namespace roadrisk
