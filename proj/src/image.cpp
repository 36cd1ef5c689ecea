#include "irsynth/image.hpp"

#include <algorithm>
#include <cmath>

namespace irsynth {

std::string to_string(const Rect& r) {
  return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," + std::to_string(r.h);
}

std::uint8_t to_u8(double v) {
  const double scaled = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

GrayImage image_from_u8(int width, int height, std::span<const std::uint8_t> codes) {
  std::vector<double> data(codes.size());
  std::transform(codes.begin(), codes.end(), data.begin(), from_u8);
  return GrayImage(width, height, std::move(data));
}

std::vector<std::uint8_t> image_to_u8(const GrayImage& img) {
  std::vector<std::uint8_t> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(), to_u8);
  return out;
}

long long foreground_count(const Mask& m) {
  return std::count(m.pixels().begin(), m.pixels().end(), std::uint8_t{1});
}

Mask binarize(const GrayImage& img, double threshold) {
  std::vector<std::uint8_t> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [threshold](double v) { return static_cast<std::uint8_t>(v >= threshold ? 1 : 0); });
  return Mask(img.width(), img.height(), std::move(out));
}

template <typename T>
Raster<T> crop(const Raster<T>& img, const Rect& r) {
  if (!r.fits_in(img.width(), img.height())) {
    fail(ErrorKind::invalid_argument, "crop rect " + to_string(r) + " outside " + std::to_string(img.width()) + "x" +
                                          std::to_string(img.height()) + " image");
  }
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(r.area()));
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) out.push_back(img.at(x, y));
  }
  return Raster<T>(r.w, r.h, std::move(out));
}

template <typename T>
Raster<T> paste(const Raster<T>& img, const Raster<T>& patch, const Rect& at) {
  if (patch.width() != at.w || patch.height() != at.h) {
    fail(ErrorKind::invalid_argument, "patch " + std::to_string(patch.width()) + "x" + std::to_string(patch.height()) +
                                          " does not match paste rect " + to_string(at));
  }
  if (!at.fits_in(img.width(), img.height())) {
    fail(ErrorKind::invalid_argument, "paste rect " + to_string(at) + " outside image");
  }
  std::vector<T> out(img.pixels().begin(), img.pixels().end());
  const auto w = static_cast<std::size_t>(img.width());
  for (int y = 0; y < at.h; ++y) {
    for (int x = 0; x < at.w; ++x) {
      out[static_cast<std::size_t>(at.y + y) * w + static_cast<std::size_t>(at.x + x)] = patch.at(x, y);
    }
  }
  return Raster<T>(img.width(), img.height(), std::move(out));
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) fail(ErrorKind::invalid_argument, "resize target dimensions must be >= 1");
  if (img.empty()) fail(ErrorKind::invalid_argument, "cannot resize an empty image");

  const int in_w = img.width();
  const int in_h = img.height();
  const double sx = static_cast<double>(in_w) / out_w;
  const double sy = static_cast<double>(in_h) / out_h;

  // Source coordinate of an output pixel centre, split into a base index and fraction.
  auto axis = [](int dst, double scale, int in_len, int& i0, int& i1, double& frac) {
    double src = (dst + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_len - 1));
    i0 = static_cast<int>(std::floor(src));
    i1 = std::min(i0 + 1, in_len - 1);
    frac = src - i0;
  };

  std::vector<double> out(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h));
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<double> fx(out_w);
  for (int x = 0; x < out_w; ++x) axis(x, sx, in_w, x0[x], x1[x], fx[x]);

  for (int y = 0; y < out_h; ++y) {
    int y0, y1;
    double fy;
    axis(y, sy, in_h, y0, y1, fy);
    for (int x = 0; x < out_w; ++x) {
      // std::lerp is exact at the endpoints and bounded for t in [0, 1].
      const double top = std::lerp(img.at(x0[x], y0), img.at(x1[x], y0), fx[x]);
      const double bottom = std::lerp(img.at(x0[x], y1), img.at(x1[x], y1), fx[x]);
      out[static_cast<std::size_t>(y) * out_w + x] = std::lerp(top, bottom, fy);
    }
  }
  return GrayImage(out_w, out_h, std::move(out));
}

template <typename T>
Raster<T> rotate90(const Raster<T>& patch, int quarter_turns) {
  if (patch.width() != patch.height()) {
    fail(ErrorKind::invalid_argument, "rotate90 requires a square patch, got " + std::to_string(patch.width()) + "x" +
                                          std::to_string(patch.height()));
  }
  if (quarter_turns < 0 || quarter_turns > 3) fail(ErrorKind::invalid_argument, "quarter_turns must be in {0,1,2,3}");

  const int s = patch.width();
  std::vector<T> out(patch.size());
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      int sx = x, sy = y;
      switch (quarter_turns) {
        case 1: sx = s - 1 - y; sy = x; break;
        case 2: sx = s - 1 - x; sy = s - 1 - y; break;
        case 3: sx = y; sy = s - 1 - x; break;
        default: break;
      }
      out[static_cast<std::size_t>(y) * s + x] = patch.at(sx, sy);
    }
  }
  return Raster<T>(s, s, std::move(out));
}

template Raster<double> crop(const Raster<double>&, const Rect&);
template Raster<std::uint8_t> crop(const Raster<std::uint8_t>&, const Rect&);
template Raster<double> paste(const Raster<double>&, const Raster<double>&, const Rect&);
template Raster<std::uint8_t> paste(const Raster<std::uint8_t>&, const Raster<std::uint8_t>&, const Rect&);
template Raster<double> rotate90(const Raster<double>&, int);
template Raster<std::uint8_t> rotate90(const Raster<std::uint8_t>&, int);

}  // namespace irsynth
