#include "irsynth/aff_check.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace irsynth {

std::vector<TensorShape> parse_shapes(const std::string& spec) {
  std::vector<TensorShape> out;
  std::stringstream items(spec);
  std::string item;
  while (std::getline(items, item, ',')) {
    int dims[3] = {0, 0, 0};
    std::stringstream parts(item);
    std::string part;
    int k = 0;
    while (std::getline(parts, part, 'x')) {
      if (k == 3) fail(ErrorKind::invalid_argument, "shape '" + item + "' must be CxHxW");
      try {
        std::size_t used = 0;
        dims[k] = std::stoi(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        fail(ErrorKind::invalid_argument, "shape '" + item + "' must be CxHxW with integer extents");
      }
      ++k;
    }
    if (k != 3 || dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
      fail(ErrorKind::invalid_argument, "shape '" + item + "' must be CxHxW with extents >= 1");
    }
    out.push_back(TensorShape{dims[0], dims[1], dims[2]});
  }
  if (out.empty()) fail(ErrorKind::invalid_argument, "no shapes given");
  return out;
}

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& fn,
                                       std::span<const double> x, double step) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = fn(probe);
    probe[i] = orig - step;
    const double down = fn(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::invalid_argument, "relative_error on vectors of different length");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

namespace {

FeatureMap random_map(const TensorShape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(s.channels) * s.height * s.width);
  for (auto& x : v) x = uniform(rng, lo, hi);
  return FeatureMap(s.channels, s.height, s.width, std::move(v));
}

Mask random_mask(int w, int h, Rng& rng) {
  std::vector<std::uint8_t> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) x = uniform01(rng) < 0.3 ? 1 : 0;
  return Mask(w, h, std::move(v));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

using Forward = FeatureMap (*)(const FeatureMap&, const AffParams&);
using Backward = FeatureMap (*)(const FeatureMap&, const AffParams&, const FeatureMap&);

double attention_grad_error(const TensorShape& s, const AffParams& p, Forward fwd, Backward bwd, Rng& rng) {
  const FeatureMap f = random_map(s, rng);
  const FeatureMap upstream = random_map(s, rng);
  const FeatureMap analytic = bwd(f, p, upstream);
  auto objective = [&](std::span<const double> x) {
    const FeatureMap out = fwd(FeatureMap(s.channels, s.height, s.width, std::vector<double>(x.begin(), x.end())), p);
    return std::inner_product(out.values().begin(), out.values().end(), upstream.values().begin(), 0.0);
  };
  const std::vector<double> numeric = central_difference(objective, f.values());
  return relative_error(analytic.values(), numeric);
}

}  // namespace

std::vector<CheckResult> run_aff_checks(std::uint64_t seed, const std::vector<TensorShape>& shapes) {
  std::vector<CheckResult> out;
  Rng rng(seed);
  for (const TensorShape& s : shapes) {
    const std::string tag = std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
    const AffParams p = AffParams::random(s.channels, rng);

    {
      const FeatureMap logits = random_map(TensorShape{1, s.height, s.width}, rng, -3.0, 3.0);
      const Mask y = random_mask(s.width, s.height, rng);
      const SoftIouResult r = soft_iou_loss(logits, y);
      auto objective = [&](std::span<const double> x) {
        return soft_iou_loss(FeatureMap(1, s.height, s.width, std::vector<double>(x.begin(), x.end())), y).loss;
      };
      const double err = relative_error(r.grad.values(), central_difference(objective, logits.values()));
      out.push_back({"soft_iou_gradient[" + tag + "]", err < kGradCheckTolerance, "rel_err=" + fmt(err), {}});
      out.push_back({"soft_iou_range[" + tag + "]", r.loss >= 0.0 && r.loss <= 1.0, "loss=" + fmt(r.loss), {}});
    }

    const double ch_err = attention_grad_error(s, p, channel_attention, channel_attention_backward, rng);
    out.push_back({"channel_attention_gradient[" + tag + "]", ch_err < kGradCheckTolerance, "rel_err=" + fmt(ch_err), {}});
    const double sp_err = attention_grad_error(s, p, spatial_attention, spatial_attention_backward, rng);
    out.push_back({"spatial_attention_gradient[" + tag + "]", sp_err < kGradCheckTolerance, "rel_err=" + fmt(sp_err), {}});

    {
      const FeatureMap f = random_map(s, rng);
      bool ok = true;
      for (double g : channel_gate(f, p)) ok = ok && g > 0.0 && g < 1.0;
      const FeatureMap sg = spatial_gate(f, p);
      for (double g : sg.values()) ok = ok && g > 0.0 && g < 1.0;
      const FeatureMap a = channel_attention(f, p), b = spatial_attention(f, p);
      for (std::size_t i = 0; i < f.size(); ++i) {
        ok = ok && std::abs(a.values()[i]) <= std::abs(f.values()[i]) && std::abs(b.values()[i]) <= std::abs(f.values()[i]);
      }
      out.push_back({"gate_bounds[" + tag + "]", ok, ok ? "" : "gate outside (0, 1) or output grew", {}});
    }

    {
      // Cyclic shift of spatial positions commutes with channel attention.
      const FeatureMap f = random_map(s, rng);
      const std::size_t n = f.plane();
      std::vector<double> shifted(f.size());
      for (int c = 0; c < s.channels; ++c) {
        for (std::size_t i = 0; i < n; ++i) shifted[c * n + (i + 1) % n] = f.values()[c * n + i];
      }
      const FeatureMap a = channel_attention(f, p);
      const FeatureMap b = channel_attention(FeatureMap(s.channels, s.height, s.width, shifted), p);
      double worst = 0.0;
      for (int c = 0; c < s.channels; ++c) {
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(b.values()[c * n + (i + 1) % n] - a.values()[c * n + i]));
      }
      out.push_back({"channel_attention_equivariance[" + tag + "]", worst == 0.0, "max_abs_diff=" + fmt(worst), {}});
    }

    {
      const FeatureMap f = random_map(s, rng);
      const AffParams z = AffParams::zeros(s.channels);
      const FeatureMap a = channel_attention(f, z), b = spatial_attention(f, z);
      bool ok = true;
      for (std::size_t i = 0; i < f.size(); ++i) ok = ok && a.values()[i] == 0.5 * f.values()[i] && b.values()[i] == 0.5 * f.values()[i];
      out.push_back({"zero_params_half_gate[" + tag + "]", ok, "", {}});
    }

    if (s.height >= 8 && s.width >= 8) {
      const FeatureMap f = random_map(s, rng);
      const auto levels = feature_pyramid(aff_forward(f, p));
      bool ok = true;
      int eh = s.height, ew = s.width;
      for (const auto& l : levels) {
        ok = ok && l.height() == eh && l.width() == ew;
        eh = (eh + 1) / 2;
        ew = (ew + 1) / 2;
      }
      std::string detail;
      if (s.height % 8 == 0 && s.width % 8 == 0) {
        auto mean = [](const FeatureMap& m) {
          return std::accumulate(m.values().begin(), m.values().end(), 0.0) / static_cast<double>(m.size());
        };
        const double drift = std::abs(mean(levels[3]) - mean(levels[0]));
        ok = ok && drift < 1e-12;
        detail = "mean_drift=" + fmt(drift);
      }
      out.push_back({"pyramid[" + tag + "]", ok, detail, {}});
    }
  }
  return out;
}

}  // namespace irsynth
