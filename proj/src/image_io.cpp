#include "irsynth/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

namespace irsynth {
namespace {

namespace fs = std::filesystem;

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) fail(ErrorKind::io, "cannot open " + path.string());
  return f;
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
}

// libpng reports errors through longjmp; everything touched between setjmp
// and the jump is either POD or owned outside this frame.
bool read_png_rows(std::FILE* fp, png_structp png, png_infop info, U8Plane& out, int& channels) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_scale_16(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.codes.assign(rowbytes * static_cast<std::size_t>(out.height), 0);
  std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = out.codes.data() + rowbytes * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return true;
}

U8Plane read_png(const fs::path& path) {
  FilePtr fp = open_file(path, "rb");
  png_byte sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorKind::format, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "libpng initialisation failed for " + path.string());
  }
  png_set_sig_bytes(png, 8);
  U8Plane raw;
  int channels = 1;
  const bool ok = read_png_rows(fp.get(), png, info, raw, channels);
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) fail(ErrorKind::format, "corrupt PNG data in " + path.string());

  if (channels == 1) return raw;
  if (channels != 3) fail(ErrorKind::format, "unsupported PNG channel layout in " + path.string());
  U8Plane gray{raw.width, raw.height, std::vector<std::uint8_t>(static_cast<std::size_t>(raw.width) * raw.height)};
  for (std::size_t i = 0; i < gray.codes.size(); ++i) {
    gray.codes[i] = luma(raw.codes[3 * i], raw.codes[3 * i + 1], raw.codes[3 * i + 2]);
  }
  return gray;
}

bool write_png_rows(std::FILE* fp, png_structp png, png_infop info, const U8Plane& plane) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(plane.width), static_cast<png_uint_32>(plane.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < plane.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(plane.codes.data() + static_cast<std::size_t>(y) * plane.width));
  }
  png_write_end(png, nullptr);
  return true;
}

void write_png(const U8Plane& plane, const fs::path& path) {
  FilePtr fp = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "libpng initialisation failed for " + path.string());
  }
  const bool ok = write_png_rows(fp.get(), png, info, plane);
  png_destroy_write_struct(&png, &info);
  if (!ok) fail(ErrorKind::io, "failed writing PNG " + path.string());
}

// Binary PGM (P5), maxval <= 255.
U8Plane read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    while (in && t.empty()) {
      int c = in.peek();
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        in >> t;
      }
    }
    return t;
  };
  if (token() != "P5") fail(ErrorKind::format, "not a binary PGM file: " + path.string());
  U8Plane p;
  int maxval = 0;
  try {
    p.width = std::stoi(token());
    p.height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    fail(ErrorKind::format, "malformed PGM header in " + path.string());
  }
  if (p.width < 1 || p.height < 1 || maxval < 1 || maxval > 255) {
    fail(ErrorKind::format, "unsupported PGM header in " + path.string());
  }
  in.get();
  p.codes.resize(static_cast<std::size_t>(p.width) * p.height);
  in.read(reinterpret_cast<char*>(p.codes.data()), static_cast<std::streamsize>(p.codes.size()));
  if (in.gcount() != static_cast<std::streamsize>(p.codes.size())) {
    fail(ErrorKind::format, "truncated PGM data in " + path.string());
  }
  if (maxval != 255) {
    for (auto& c : p.codes) c = static_cast<std::uint8_t>(std::lround(255.0 * c / maxval));
  }
  return p;
}

void write_pgm(const U8Plane& plane, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << "P5\n" << plane.width << " " << plane.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(plane.codes.data()), static_cast<std::streamsize>(plane.codes.size()));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

}  // namespace

bool is_supported_raster(const fs::path& path) {
  const std::string e = lower_ext(path);
  return e == ".png" || e == ".pgm";
}

std::map<std::string, fs::path> list_rasters_by_stem(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::io, "not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_supported_raster(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second) {
      fail(ErrorKind::validation, "duplicate stem '" + stem + "' in " + dir.string());
    }
  }
  return out;
}

U8Plane read_u8(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::io, "no such file: " + path.string());
  const std::string e = lower_ext(path);
  if (e == ".png") return read_png(path);
  if (e == ".pgm") return read_pgm(path);
  fail(ErrorKind::format, "unsupported raster encoding: " + path.string());
}

void write_u8(const U8Plane& plane, const fs::path& path) {
  if (plane.width < 1 || plane.height < 1) fail(ErrorKind::invalid_argument, "cannot write an empty raster");
  const std::string e = lower_ext(path);
  if (e == ".png") return write_png(plane, path);
  if (e == ".pgm") return write_pgm(plane, path);
  fail(ErrorKind::invalid_argument, "unsupported output extension: " + path.string());
}

GrayImage load_image(const fs::path& path) {
  U8Plane p = read_u8(path);
  return image_from_u8(p.width, p.height, p.codes);
}

void save_image(const GrayImage& img, const fs::path& path) {
  write_u8(U8Plane{img.width(), img.height(), image_to_u8(img)}, path);
}

Mask load_mask(const fs::path& path) {
  U8Plane p = read_u8(path);
  std::set<std::uint8_t> distinct(p.codes.begin(), p.codes.end());
  if (distinct.empty()) fail(ErrorKind::format, "empty mask " + path.string());
  const std::uint8_t fg = *distinct.rbegin();
  if (distinct.size() > 2 || (distinct.size() == 2 && *distinct.begin() != 0)) {
    std::ostringstream msg;
    msg << "ambiguous mask " << path.string() << ": values {";
    int shown = 0;
    for (auto v : distinct) {
      if (shown++ == 8) {
        msg << ",...";
        break;
      }
      msg << (shown > 1 ? "," : "") << static_cast<int>(v);
    }
    msg << "}";
    fail(ErrorKind::format, msg.str());
  }
  std::vector<std::uint8_t> bits(p.codes.size());
  std::transform(p.codes.begin(), p.codes.end(), bits.begin(),
                 [fg](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0 && v == fg ? 1 : 0); });
  return Mask(p.width, p.height, std::move(bits));
}

void save_mask(const Mask& mask, const fs::path& path) {
  U8Plane p{mask.width(), mask.height(), std::vector<std::uint8_t>(mask.size())};
  std::transform(mask.pixels().begin(), mask.pixels().end(), p.codes.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  write_u8(p, path);
}

}  // namespace irsynth
