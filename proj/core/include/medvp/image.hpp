#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "medvp/types.hpp"

namespace medvp {

/// 8-bit RGB image, rows top to bottom, interleaved channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] ImageSize size() const { return {width_, height_}; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  [[nodiscard]] Rgb at(int x, int y) const {
    const std::uint8_t* p = &pixels_[index(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &pixels_[index(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return pixels_; }
  [[nodiscard]] std::span<std::uint8_t> bytes() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Decodes PNG or JPEG (detected from the file signature) to RGB8.
/// Grayscale is expanded, alpha is dropped, 16-bit samples are reduced.
/// Throws Error on unreadable or corrupt files.
Image read_image(const std::filesystem::path& path);

/// Dimensions only; cheaper than a full decode for PNG.
ImageSize read_image_size(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG with no timestamps or text chunks, so the same
/// pixels always produce the same bytes.
void write_png(const Image& img, const std::filesystem::path& path);

}  // namespace medvp
