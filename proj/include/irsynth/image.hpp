#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "irsynth/error.hpp"

namespace irsynth {

/// Axis-aligned pixel region: top-left corner (x, y) and extent w x h.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Rect&) const = default;

  long long area() const { return static_cast<long long>(w) * h; }
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool intersects(const Rect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  bool fits_in(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width && y + h <= height;
  }
};

std::string to_string(const Rect& r);

namespace detail {
template <typename T>
struct PixelTraits;

template <>
struct PixelTraits<double> {
  static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
  static constexpr const char* what = "intensity outside [0, 1]";
};

template <>
struct PixelTraits<std::uint8_t> {
  static bool valid(std::uint8_t v) { return v <= 1; }
  static constexpr const char* what = "mask value not in {0, 1}";
};
}  // namespace detail

/// Single-channel row-major raster. Values are validated on construction,
/// so every live Raster satisfies its pixel-type invariant.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, T fill = T{}) : Raster(width, height, std::vector<T>(checked_size(width, height), fill)) {}

  Raster(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height)) {
      fail(ErrorKind::invalid_argument, "raster data length " + std::to_string(data_.size()) + " != " +
                                            std::to_string(width) + "x" + std::to_string(height));
    }
    for (const T& v : data_) {
      if (!detail::PixelTraits<T>::valid(v)) fail(ErrorKind::invalid_argument, detail::PixelTraits<T>::what);
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Raster& o) const { return width_ == o.width_ && height_ == o.height_; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const {
    return width_ == o.width() && height_ == o.height();
  }
  Rect bounds() const { return Rect{0, 0, width_, height_}; }

  T at(int x, int y) const { return data_[index(x, y)]; }
  std::span<const T> pixels() const { return data_; }

  bool operator==(const Raster&) const = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) fail(ErrorKind::invalid_argument, "negative raster dimension");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Intensities in working scale [0, 1]; 8-bit on disk.
using GrayImage = Raster<double>;
/// Binary annotation, values {0, 1}.
using Mask = Raster<std::uint8_t>;

/// 8-bit code -> working scale.
inline double from_u8(std::uint8_t v) { return static_cast<double>(v) / 255.0; }
/// Working scale -> 8-bit code, round half away from zero, saturating.
std::uint8_t to_u8(double v);

GrayImage image_from_u8(int width, int height, std::span<const std::uint8_t> codes);
std::vector<std::uint8_t> image_to_u8(const GrayImage& img);

long long foreground_count(const Mask& m);

/// Thresholds a soft map: value >= threshold becomes foreground.
Mask binarize(const GrayImage& img, double threshold = 0.5);

template <typename T>
Raster<T> crop(const Raster<T>& img, const Rect& r);

template <typename T>
Raster<T> paste(const Raster<T>& img, const Raster<T>& patch, const Rect& at);

/// Bilinear resampling with half-pixel-centre coordinate mapping and edge clamping.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

/// Counter-clockwise rotation of a square patch by quarter_turns * 90 degrees.
/// One turn maps [a b; c d] to [b d; a c].
template <typename T>
Raster<T> rotate90(const Raster<T>& patch, int quarter_turns);

extern template Raster<double> crop(const Raster<double>&, const Rect&);
extern template Raster<std::uint8_t> crop(const Raster<std::uint8_t>&, const Rect&);
extern template Raster<double> paste(const Raster<double>&, const Raster<double>&, const Rect&);
extern template Raster<std::uint8_t> paste(const Raster<std::uint8_t>&, const Raster<std::uint8_t>&, const Rect&);
extern template Raster<double> rotate90(const Raster<double>&, int);
extern template Raster<std::uint8_t> rotate90(const Raster<std::uint8_t>&, int);

}  // namespace irsynth
