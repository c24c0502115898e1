#include "roadrisk/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace roadrisk {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

struct RasterHeader {
  std::size_t width = 0;
  std::size_t height = 0;
};

RasterHeader read_header(std::istream& in, const std::filesystem::path& path,
                         const char* magic) {
  if (next_token(in) != magic) {
    fail(path, std::string("not a binary ") + (magic[1] == '6' ? "PPM" : "PGM") +
                   " file (expected " + magic + ")");
  }
  RasterHeader h;
  try {
    h.width = std::stoul(next_token(in));
    h.height = std::stoul(next_token(in));
    const unsigned long maxval = std::stoul(next_token(in));
    if (maxval != 255) fail(path, "unsupported max value (only 255 is handled)");
  } catch (const std::logic_error&) {
    fail(path, "malformed raster header");
  }
  if (h.width == 0 || h.height == 0) fail(path, "zero raster dimension");
  return h;
}

}  // namespace

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open image");
  const RasterHeader h = read_header(in, path, "P6");

  std::vector<char> bytes(h.width * h.height * 3);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    fail(path, "truncated pixel data");
  }

  Tensor image({h.height, h.width, 3});
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    image[i] = static_cast<float>(static_cast<unsigned char>(bytes[i])) / 255.0f;
  }
  return image;
}

void write_ppm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw std::invalid_argument("image tensor must be H x W x 3");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open image for writing");
  out << "P6\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";

  std::vector<char> bytes(image.numel());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(image[i], 0.0f, 1.0f);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "failed writing pixel data");
}

Mask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open mask");
  const RasterHeader h = read_header(in, path, "P5");

  Mask mask;
  mask.width = h.width;
  mask.height = h.height;
  mask.values.resize(h.width * h.height);
  in.read(reinterpret_cast<char*>(mask.values.data()),
          static_cast<std::streamsize>(mask.values.size()));
  if (static_cast<std::size_t>(in.gcount()) != mask.values.size()) {
    fail(path, "truncated mask data");
  }
  return mask;
}

void write_pgm(const Mask& mask, const std::filesystem::path& path) {
  if (mask.values.size() != mask.width * mask.height) {
    throw std::invalid_argument("mask buffer size does not match its dimensions");
  }
  if (mask.width == 0 || mask.height == 0) {
    throw std::invalid_argument("mask dimensions must be positive");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open mask for writing");
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(mask.values.data()),
            static_cast<std::streamsize>(mask.values.size()));
  if (!out) fail(path, "failed writing mask data");
}

}  // namespace roadrisk
