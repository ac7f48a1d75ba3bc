#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace avsync {

/// Row-major 8-bit RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image&) const = default;
};

/// Throws std::invalid_argument unless width, height > 0 and the pixel
/// buffer holds exactly width * height RGB triples.
void validate(const Image& img);

/// 8-bit RGB or RGBA/gray/palette PNGs are converted to RGB.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace avsync
