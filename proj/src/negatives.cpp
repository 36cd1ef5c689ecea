#include "irsynth/negatives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace irsynth {
namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

}  // namespace

std::vector<TargetInstance> extract_targets(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  // Two-pass labelling with union-find; provisional labels are 1-based.
  std::vector<int> label(mask.size(), 0);
  std::vector<int> parent{0};
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int current = 0;
      // Already-visited 8-neighbours: W, NW, N, NE.
      const int nbr[4][2] = {{x - 1, y}, {x - 1, y - 1}, {x, y - 1}, {x + 1, y - 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w) continue;
        const int l = label[idx(n[0], n[1])];
        if (l == 0) continue;
        if (current == 0) {
          current = l;
        } else {
          unite(parent, current, l);
        }
      }
      if (current == 0) {
        current = static_cast<int>(parent.size());
        parent.push_back(current);
      }
      label[idx(x, y)] = current;
    }
  }

  std::vector<int> component(parent.size(), -1);
  std::vector<TargetInstance> targets;
  std::vector<double> sum_x, sum_y;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = label[idx(x, y)];
      if (l == 0) continue;
      const int root = find_root(parent, l);
      if (component[root] < 0) {
        component[root] = static_cast<int>(targets.size());
        targets.push_back(TargetInstance{component[root], {}, 0, Rect{x, y, 1, 1}});
        sum_x.push_back(0.0);
        sum_y.push_back(0.0);
      }
      const int c = component[root];
      TargetInstance& t = targets[c];
      ++t.pixel_count;
      sum_x[c] += x;
      sum_y[c] += y;
      const int x1 = std::max(t.bbox.x + t.bbox.w, x + 1);
      const int y1 = std::max(t.bbox.y + t.bbox.h, y + 1);
      t.bbox.x = std::min(t.bbox.x, x);
      t.bbox.w = x1 - t.bbox.x;
      t.bbox.h = y1 - t.bbox.y;
    }
  }
  for (std::size_t c = 0; c < targets.size(); ++c) {
    const auto n = static_cast<double>(targets[c].pixel_count);
    targets[c].centroid = Point2{sum_x[c] / n, sum_y[c] / n};
  }
  return targets;
}

AnchorPatch anchor_patch(const TargetInstance& target, int s, int img_w, int img_h) {
  if (s < 1 || s % 2 == 0) fail(ErrorKind::invalid_argument, "patch side s must be odd and >= 1, got " + std::to_string(s));
  if (s > std::min(img_w, img_h)) {
    fail(ErrorKind::invalid_argument, "patch side " + std::to_string(s) + " exceeds image " + std::to_string(img_w) +
                                          "x" + std::to_string(img_h));
  }
  const int cx = static_cast<int>(std::lround(target.centroid.x));
  const int cy = static_cast<int>(std::lround(target.centroid.y));
  const int x = std::clamp(cx - s / 2, 0, img_w - s);
  const int y = std::clamp(cy - s / 2, 0, img_h - s);
  return AnchorPatch{Rect{x, y, s, s}, s};
}

int quarter_turns_for(int beta) {
  if (!is_legal_beta(beta)) fail(ErrorKind::invalid_argument, "rotation must be one of 0, 90, 180, 270");
  return beta / 90;
}

bool is_legal_beta(int beta) { return std::find(kRotationAngles.begin(), kRotationAngles.end(), beta) != kRotationAngles.end(); }

template <typename T>
Raster<T> rotate_window(const Raster<T>& img, const Rect& at, int beta) {
  return paste(img, rotate90(crop(img, at), quarter_turns_for(beta)), at);
}

template Raster<double> rotate_window(const Raster<double>&, const Rect&, int);
template Raster<std::uint8_t> rotate_window(const Raster<std::uint8_t>&, const Rect&, int);

NegativeSet make_negatives(const GrayImage& img, const Mask& mask, const std::vector<TargetInstance>& targets, int s) {
  if (!img.same_shape(mask)) fail(ErrorKind::invalid_argument, "image and mask dimensions differ");
  std::vector<AnchorPatch> anchors;
  anchors.reserve(targets.size());
  for (const auto& t : targets) anchors.push_back(anchor_patch(t, s, img.width(), img.height()));

  NegativeSet out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::optional<std::size_t> clash;
    for (std::size_t j = 0; j < targets.size() && !clash; ++j) {
      if (j != i && anchors[i].rect.intersects(anchors[j].rect)) clash = j;
    }
    if (clash) {
      out.skipped.push_back(SkippedTarget{targets[i].id, targets[*clash].id, anchors[i].rect});
      continue;
    }
    for (int beta : kRotationAngles) {
      out.variants.push_back(NegativeVariant{rotate_window(img, anchors[i].rect, beta),
                                             rotate_window(mask, anchors[i].rect, beta), targets[i].id, beta,
                                             anchors[i]});
    }
  }
  return out;
}

}  // namespace irsynth
