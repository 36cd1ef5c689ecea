#pragma once

#include <array>
#include <span>
#include <vector>

#include "irsynth/image.hpp"
#include "irsynth/rng.hpp"

namespace irsynth {

inline constexpr int kDefaultReduction = 16;
inline constexpr int kSpatialKernel = 7;
inline constexpr int kSpatialPad = kSpatialKernel / 2;
inline constexpr double kSoftIouEpsilon = 1e-6;

/// Dense C x H x W tensor, row-major with channel outermost.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, double fill = 0.0);
  FeatureMap(int channels, int height, int width, std::vector<double> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height_) * width_; }

  double at(int c, int y, int x) const { return data_[offset(c, y, x)]; }
  double& at(int c, int y, int x) { return data_[offset(c, y, x)]; }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool same_shape(const FeatureMap& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

 private:
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Weights of the channel gate (shared one-hidden-layer perceptron with
/// ReLU) and the spatial gate (7x7 convolution over [max, mean]).
struct AffParams {
  int channels = 0;
  int hidden = 0;
  std::vector<double> w1;  // hidden x channels
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // channels x hidden
  std::vector<double> b2;  // channels
  std::array<double, 2 * kSpatialKernel * kSpatialKernel> conv{};  // [in][ky][kx], in 0 = max, 1 = mean
  double conv_bias = 0.0;

  static int hidden_size(int channels, int reduction = kDefaultReduction);
  static AffParams zeros(int channels, int reduction = kDefaultReduction);
  /// Weights uniform in [-scale, scale].
  static AffParams random(int channels, Rng& rng, int reduction = kDefaultReduction, double scale = 0.5);

  void validate() const;
  double kernel(int in, int ky, int kx) const { return conv[(in * kSpatialKernel + ky) * kSpatialKernel + kx]; }
};

double sigmoid(double x);

/// sigmoid(MLP(max_pool(f)) + MLP(avg_pool(f))) per channel, scaled onto f.
FeatureMap channel_attention(const FeatureMap& f, const AffParams& p);
/// Per-channel gate values of channel_attention.
std::vector<double> channel_gate(const FeatureMap& f, const AffParams& p);
/// Gradient of sum(upstream * channel_attention(f)) with respect to f.
FeatureMap channel_attention_backward(const FeatureMap& f, const AffParams& p, const FeatureMap& upstream);

/// sigmoid(conv7x7([max_c f, mean_c f]) + b) per pixel, scaled onto every channel.
FeatureMap spatial_attention(const FeatureMap& f, const AffParams& p);
/// 1 x H x W gate map of spatial_attention.
FeatureMap spatial_gate(const FeatureMap& f, const AffParams& p);
FeatureMap spatial_attention_backward(const FeatureMap& f, const AffParams& p, const FeatureMap& upstream);

/// Channel gate followed by spatial gate.
FeatureMap aff_forward(const FeatureMap& f, const AffParams& p);

/// Four levels at scale 1, 1/2, 1/4, 1/8. Each halving averages 2x2 blocks
/// (partial blocks at odd borders average the pixels they have).
std::array<FeatureMap, 4> feature_pyramid(const FeatureMap& f);
FeatureMap avg_pool2(const FeatureMap& f);

struct SoftIouResult {
  double loss = 0.0;
  FeatureMap grad;  // d loss / d logits
};

/// 1 - (sum p*y + eps) / (sum p + sum y - sum p*y + eps), p = sigmoid(logits).
SoftIouResult soft_iou_loss(const FeatureMap& logits, const Mask& y, double eps = kSoftIouEpsilon);

struct NegLossSummary {
  double sum = 0.0;  // the optimised objective
  double min = 0.0;  // running-minimum diagnostic
};

NegLossSummary l_neg(std::span<const double> losses);

}  // namespace irsynth
