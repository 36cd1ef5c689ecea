#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "irsynth/image.hpp"

namespace irsynth {

// Lossless 8-bit rasters. PNG (any colour type; colour is reduced to BT.601
// luma, 16-bit samples are scaled to 8 bit) and binary PGM are accepted on
// read; the writer picks the format from the extension (.png or .pgm).

GrayImage load_image(const std::filesystem::path& path);
void save_image(const GrayImage& img, const std::filesystem::path& path);

/// Reads a mask stored with one background value 0 and at most one
/// foreground value. Throws ErrorKind::format for ambiguous masks.
Mask load_mask(const std::filesystem::path& path);
/// Masks are written as 0 / 255.
void save_mask(const Mask& mask, const std::filesystem::path& path);

/// Raw 8-bit planes, exposed for tools that need the on-disk codes.
struct U8Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> codes;
};
U8Plane read_u8(const std::filesystem::path& path);
void write_u8(const U8Plane& plane, const std::filesystem::path& path);

bool is_supported_raster(const std::filesystem::path& path);

/// Supported rasters directly inside dir, keyed (and so sorted) by stem.
/// Two files sharing a stem are an error.
std::map<std::string, std::filesystem::path> list_rasters_by_stem(const std::filesystem::path& dir);

}  // namespace irsynth
