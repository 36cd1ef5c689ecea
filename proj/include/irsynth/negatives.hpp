#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "irsynth/image.hpp"

namespace irsynth {

inline constexpr int kDefaultPatchSide = 3;
inline constexpr std::array<int, 4> kRotationAngles = {0, 90, 180, 270};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// One 8-connected foreground component of a mask.
struct TargetInstance {
  int id = 0;  // raster order of the component's first pixel
  Point2 centroid;
  long long pixel_count = 0;
  Rect bbox;
};

/// s x s window centred on a target, translated to stay inside the image.
struct AnchorPatch {
  Rect rect;
  int s = 0;
};

/// One rotated variant: a single target's anchor window rotated in both
/// the image and the mask, every other pixel untouched.
struct NegativeVariant {
  GrayImage image;
  Mask mask;
  int target_id = 0;
  int beta = 0;  // degrees, counter-clockwise
  AnchorPatch anchor;
};

struct SkippedTarget {
  int target_id = 0;
  int overlaps_with = 0;
  Rect anchor;
};

struct NegativeSet {
  std::vector<NegativeVariant> variants;
  std::vector<SkippedTarget> skipped;
};

/// 8-connected component labelling.
std::vector<TargetInstance> extract_targets(const Mask& mask);

AnchorPatch anchor_patch(const TargetInstance& target, int s, int img_w, int img_h);

/// 4 variants (beta = 0, 90, 180, 270) per target whose anchor window does
/// not overlap another target's. Targets with overlapping anchors are
/// reported in `skipped` and produce no variants.
NegativeSet make_negatives(const GrayImage& img, const Mask& mask, const std::vector<TargetInstance>& targets, int s);

/// Rotates the window `at` of an image/mask pair by beta degrees.
template <typename T>
Raster<T> rotate_window(const Raster<T>& img, const Rect& at, int beta);

int quarter_turns_for(int beta);
bool is_legal_beta(int beta);

}  // namespace irsynth
