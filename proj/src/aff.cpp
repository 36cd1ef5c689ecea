#include "irsynth/aff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace irsynth {

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : FeatureMap(channels, height, width,
                 std::vector<double>(static_cast<std::size_t>(std::max(channels, 0)) * std::max(height, 0) *
                                         std::max(width, 0),
                                     fill)) {}

FeatureMap::FeatureMap(int channels, int height, int width, std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (channels < 1 || height < 1 || width < 1) fail(ErrorKind::invalid_argument, "feature map dimensions must be >= 1");
  if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
    fail(ErrorKind::invalid_argument, "feature map data length does not match C x H x W");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "feature map contains a non-finite value");
  }
}

int AffParams::hidden_size(int channels, int reduction) {
  if (reduction < 1) fail(ErrorKind::invalid_argument, "reduction ratio must be >= 1");
  return std::max(1, channels / reduction);
}

AffParams AffParams::zeros(int channels, int reduction) {
  if (channels < 1) fail(ErrorKind::invalid_argument, "channels must be >= 1");
  AffParams p;
  p.channels = channels;
  p.hidden = hidden_size(channels, reduction);
  p.w1.assign(static_cast<std::size_t>(p.hidden) * channels, 0.0);
  p.b1.assign(p.hidden, 0.0);
  p.w2.assign(static_cast<std::size_t>(channels) * p.hidden, 0.0);
  p.b2.assign(channels, 0.0);
  return p;
}

AffParams AffParams::random(int channels, Rng& rng, int reduction, double scale) {
  AffParams p = zeros(channels, reduction);
  auto fill = [&](auto& v) {
    for (auto& x : v) x = uniform(rng, -scale, scale);
  };
  fill(p.w1);
  fill(p.b1);
  fill(p.w2);
  fill(p.b2);
  fill(p.conv);
  p.conv_bias = uniform(rng, -scale, scale);
  return p;
}

void AffParams::validate() const {
  if (channels < 1 || hidden < 1) fail(ErrorKind::invalid_argument, "AffParams needs channels >= 1 and hidden >= 1");
  const auto ch = static_cast<std::size_t>(channels), hd = static_cast<std::size_t>(hidden);
  if (w1.size() != hd * ch || b1.size() != hd || w2.size() != ch * hd || b2.size() != ch) {
    fail(ErrorKind::invalid_argument, "AffParams weight shapes inconsistent with channels/hidden");
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require_channels(const FeatureMap& f, const AffParams& p) {
  p.validate();
  if (f.channels() != p.channels) {
    fail(ErrorKind::invalid_argument, "feature map has " + std::to_string(f.channels()) + " channels, params expect " +
                                          std::to_string(p.channels));
  }
}

void require_upstream(const FeatureMap& f, const FeatureMap& g) {
  if (!f.same_shape(g)) fail(ErrorKind::invalid_argument, "upstream gradient shape differs from input");
}

// Hidden pre-activation and output of the shared perceptron for one input vector.
struct MlpPass {
  std::vector<double> pre;  // hidden
  std::vector<double> out;  // channels
};

MlpPass mlp(const AffParams& p, std::span<const double> v) {
  MlpPass r{std::vector<double>(p.hidden), std::vector<double>(p.channels)};
  for (int h = 0; h < p.hidden; ++h) {
    double acc = p.b1[h];
    for (int c = 0; c < p.channels; ++c) acc += p.w1[static_cast<std::size_t>(h) * p.channels + c] * v[c];
    r.pre[h] = acc;
  }
  for (int c = 0; c < p.channels; ++c) {
    double acc = p.b2[c];
    for (int h = 0; h < p.hidden; ++h) acc += p.w2[static_cast<std::size_t>(c) * p.hidden + h] * std::max(0.0, r.pre[h]);
    r.out[c] = acc;
  }
  return r;
}

// d(out . dz)/dv for the perceptron.
std::vector<double> mlp_backward(const AffParams& p, const MlpPass& pass, std::span<const double> dz) {
  std::vector<double> dh(p.hidden, 0.0);
  for (int h = 0; h < p.hidden; ++h) {
    if (pass.pre[h] <= 0.0) continue;
    double acc = 0.0;
    for (int c = 0; c < p.channels; ++c) acc += p.w2[static_cast<std::size_t>(c) * p.hidden + h] * dz[c];
    dh[h] = acc;
  }
  std::vector<double> dv(p.channels, 0.0);
  for (int c = 0; c < p.channels; ++c) {
    double acc = 0.0;
    for (int h = 0; h < p.hidden; ++h) acc += p.w1[static_cast<std::size_t>(h) * p.channels + c] * dh[h];
    dv[c] = acc;
  }
  return dv;
}

struct ChannelPools {
  std::vector<double> max;
  std::vector<double> avg;
  std::vector<std::size_t> argmax;  // index within the channel plane
};

ChannelPools channel_pools(const FeatureMap& f) {
  const std::size_t n = f.plane();
  ChannelPools r{std::vector<double>(f.channels()), std::vector<double>(f.channels()),
                 std::vector<std::size_t>(f.channels())};
  for (int c = 0; c < f.channels(); ++c) {
    const auto plane = f.values().subspan(static_cast<std::size_t>(c) * n, n);
    double mx = -std::numeric_limits<double>::infinity(), sum = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (plane[i] > mx) {
        mx = plane[i];
        arg = i;
      }
      sum += plane[i];
    }
    r.max[c] = mx;
    r.avg[c] = sum / static_cast<double>(n);
    r.argmax[c] = arg;
  }
  return r;
}

struct SpatialPools {
  std::vector<double> max;  // per pixel
  std::vector<double> avg;
  std::vector<int> argmax;  // channel index
};

SpatialPools spatial_pools(const FeatureMap& f) {
  const std::size_t n = f.plane();
  SpatialPools r{std::vector<double>(n, -std::numeric_limits<double>::infinity()), std::vector<double>(n, 0.0),
                 std::vector<int>(n, 0)};
  const auto v = f.values();
  for (int c = 0; c < f.channels(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = v[static_cast<std::size_t>(c) * n + i];
      if (x > r.max[i]) {
        r.max[i] = x;
        r.argmax[i] = c;
      }
      r.avg[i] += x;
    }
  }
  for (auto& a : r.avg) a /= f.channels();
  return r;
}

// Zero-padded 7x7 cross-correlation of the [max, avg] pair, plus bias.
std::vector<double> spatial_logits(const SpatialPools& pools, const AffParams& p, int h, int w) {
  std::vector<double> z(static_cast<std::size_t>(h) * w, p.conv_bias);
  const std::vector<double>* inputs[2] = {&pools.max, &pools.avg};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int in = 0; in < 2; ++in) {
        for (int ky = 0; ky < kSpatialKernel; ++ky) {
          const int sy = y + ky - kSpatialPad;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < kSpatialKernel; ++kx) {
            const int sx = x + kx - kSpatialPad;
            if (sx < 0 || sx >= w) continue;
            acc += p.kernel(in, ky, kx) * (*inputs[in])[static_cast<std::size_t>(sy) * w + sx];
          }
        }
      }
      z[static_cast<std::size_t>(y) * w + x] += acc;
    }
  }
  return z;
}

}  // namespace

std::vector<double> channel_gate(const FeatureMap& f, const AffParams& p) {
  require_channels(f, p);
  const ChannelPools pools = channel_pools(f);
  const MlpPass a = mlp(p, pools.max);
  const MlpPass b = mlp(p, pools.avg);
  std::vector<double> gate(f.channels());
  for (int c = 0; c < f.channels(); ++c) gate[c] = sigmoid(a.out[c] + b.out[c]);
  return gate;
}

FeatureMap channel_attention(const FeatureMap& f, const AffParams& p) {
  const std::vector<double> gate = channel_gate(f, p);
  FeatureMap out = f;
  const std::size_t n = f.plane();
  for (int c = 0; c < f.channels(); ++c) {
    for (std::size_t i = 0; i < n; ++i) out.values()[c * n + i] *= gate[c];
  }
  return out;
}

FeatureMap channel_attention_backward(const FeatureMap& f, const AffParams& p, const FeatureMap& upstream) {
  require_channels(f, p);
  require_upstream(f, upstream);
  const std::size_t n = f.plane();
  const ChannelPools pools = channel_pools(f);
  const MlpPass a = mlp(p, pools.max);
  const MlpPass b = mlp(p, pools.avg);

  std::vector<double> gate(f.channels()), dz(f.channels());
  for (int c = 0; c < f.channels(); ++c) {
    gate[c] = sigmoid(a.out[c] + b.out[c]);
    double dgate = 0.0;
    for (std::size_t i = 0; i < n; ++i) dgate += upstream.values()[c * n + i] * f.values()[c * n + i];
    dz[c] = dgate * gate[c] * (1.0 - gate[c]);
  }
  const std::vector<double> dmax = mlp_backward(p, a, dz);
  const std::vector<double> davg = mlp_backward(p, b, dz);

  FeatureMap grad(f.channels(), f.height(), f.width());
  for (int c = 0; c < f.channels(); ++c) {
    const double spread = davg[c] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      grad.values()[c * n + i] = upstream.values()[c * n + i] * gate[c] + spread;
    }
    grad.values()[c * n + pools.argmax[c]] += dmax[c];
  }
  return grad;
}

FeatureMap spatial_gate(const FeatureMap& f, const AffParams& p) {
  const SpatialPools pools = spatial_pools(f);
  std::vector<double> z = spatial_logits(pools, p, f.height(), f.width());
  for (auto& v : z) v = sigmoid(v);
  return FeatureMap(1, f.height(), f.width(), std::move(z));
}

FeatureMap spatial_attention(const FeatureMap& f, const AffParams& p) {
  const FeatureMap gate = spatial_gate(f, p);
  FeatureMap out = f;
  const std::size_t n = f.plane();
  for (int c = 0; c < f.channels(); ++c) {
    for (std::size_t i = 0; i < n; ++i) out.values()[c * n + i] *= gate.values()[i];
  }
  return out;
}

FeatureMap spatial_attention_backward(const FeatureMap& f, const AffParams& p, const FeatureMap& upstream) {
  require_upstream(f, upstream);
  const int h = f.height(), w = f.width();
  const std::size_t n = f.plane();
  const SpatialPools pools = spatial_pools(f);
  const std::vector<double> z = spatial_logits(pools, p, h, w);

  std::vector<double> gate(n), dz(n);
  for (std::size_t i = 0; i < n; ++i) {
    gate[i] = sigmoid(z[i]);
    double dgate = 0.0;
    for (int c = 0; c < f.channels(); ++c) dgate += upstream.values()[c * n + i] * f.values()[c * n + i];
    dz[i] = dgate * gate[i] * (1.0 - gate[i]);
  }

  // Transpose of the padded correlation.
  std::vector<double> din[2] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double g = dz[static_cast<std::size_t>(y) * w + x];
      for (int in = 0; in < 2; ++in) {
        for (int ky = 0; ky < kSpatialKernel; ++ky) {
          const int sy = y + ky - kSpatialPad;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < kSpatialKernel; ++kx) {
            const int sx = x + kx - kSpatialPad;
            if (sx < 0 || sx >= w) continue;
            din[in][static_cast<std::size_t>(sy) * w + sx] += p.kernel(in, ky, kx) * g;
          }
        }
      }
    }
  }

  FeatureMap grad(f.channels(), h, w);
  for (int c = 0; c < f.channels(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      grad.values()[c * n + i] = upstream.values()[c * n + i] * gate[i] + din[1][i] / f.channels();
    }
  }
  for (std::size_t i = 0; i < n; ++i) grad.values()[pools.argmax[i] * n + i] += din[0][i];
  return grad;
}

FeatureMap aff_forward(const FeatureMap& f, const AffParams& p) { return spatial_attention(channel_attention(f, p), p); }

FeatureMap avg_pool2(const FeatureMap& f) {
  const int oh = (f.height() + 1) / 2, ow = (f.width() + 1) / 2;
  FeatureMap out(f.channels(), oh, ow);
  for (int c = 0; c < f.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double sum = 0.0;
        int count = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int sy = 2 * y + dy, sx = 2 * x + dx;
            if (sy < f.height() && sx < f.width()) {
              sum += f.at(c, sy, sx);
              ++count;
            }
          }
        }
        out.at(c, y, x) = sum / count;
      }
    }
  }
  return out;
}

std::array<FeatureMap, 4> feature_pyramid(const FeatureMap& f) {
  if (f.height() < 8 || f.width() < 8) fail(ErrorKind::invalid_argument, "feature pyramid needs spatial dims >= 8");
  std::array<FeatureMap, 4> levels;
  levels[0] = f;
  for (std::size_t k = 1; k < levels.size(); ++k) levels[k] = avg_pool2(levels[k - 1]);
  return levels;
}

SoftIouResult soft_iou_loss(const FeatureMap& logits, const Mask& y, double eps) {
  if (logits.channels() != 1) fail(ErrorKind::invalid_argument, "soft IoU expects single-channel logits");
  if (logits.width() != y.width() || logits.height() != y.height()) {
    fail(ErrorKind::invalid_argument, "logits and mask dimensions differ");
  }
  if (!(eps > 0.0)) fail(ErrorKind::invalid_argument, "soft IoU smoothing must be > 0");
  const std::size_t n = logits.size();
  std::vector<double> prob(n);
  double inter = 0.0, sum_p = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prob[i] = sigmoid(logits.values()[i]);
    const double t = y.pixels()[i];
    inter += prob[i] * t;
    sum_p += prob[i];
    sum_y += t;
  }
  const double num = inter + eps;
  const double den = sum_p + sum_y - inter + eps;
  SoftIouResult r{1.0 - num / den, FeatureMap(1, logits.height(), logits.width())};
  // dI/dp = y, dU/dp = 1 - y.
  const double den2 = den * den;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = y.pixels()[i];
    const double dloss_dp = -(t * den - num * (1.0 - t)) / den2;
    r.grad.values()[i] = dloss_dp * prob[i] * (1.0 - prob[i]);
  }
  return r;
}

NegLossSummary l_neg(std::span<const double> losses) {
  if (losses.empty()) fail(ErrorKind::invalid_argument, "l_neg needs at least one loss");
  NegLossSummary s{0.0, losses.front()};
  for (double l : losses) {
    s.sum += l;
    s.min = std::min(s.min, l);
  }
  return s;
}

}  // namespace irsynth
