#include "irsynth/noise.hpp"

#include <algorithm>
#include <cmath>

namespace irsynth {

void NoiseSamplerConfig::validate() const {
  if (grid < 1) fail(ErrorKind::invalid_argument, "grid must be >= 1, got " + std::to_string(grid));
  if (!(var_max > 0.0)) fail(ErrorKind::invalid_argument, "var_max must be > 0");
  if (!(mean_max > 0.0)) fail(ErrorKind::invalid_argument, "mean_max must be > 0");
  if (n_sources < 1) fail(ErrorKind::invalid_argument, "n_sources must be >= 1");
}

std::vector<Rect> partition_regions(int width, int height, int grid) {
  if (grid < 1) fail(ErrorKind::invalid_argument, "grid must be >= 1");
  if (width < grid || height < grid) {
    fail(ErrorKind::invalid_argument, "image " + std::to_string(width) + "x" + std::to_string(height) +
                                          " is smaller than a " + std::to_string(grid) + "x" + std::to_string(grid) +
                                          " grid");
  }
  const int cw = width / grid;
  const int ch = height / grid;
  std::vector<Rect> rects;
  rects.reserve(static_cast<std::size_t>(grid) * grid);
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const int w = gx == grid - 1 ? width - cw * (grid - 1) : cw;
      const int h = gy == grid - 1 ? height - ch * (grid - 1) : ch;
      rects.push_back(Rect{gx * cw, gy * ch, w, h});
    }
  }
  return rects;
}

std::vector<Rect> partition_regions(const GrayImage& img, const NoiseSamplerConfig& cfg) {
  return partition_regions(img.width(), img.height(), cfg.grid);
}

namespace {

double gradient_magnitude(const GrayImage& img, int x, int y) {
  const int xn = std::min(x + 1, img.width() - 1);
  const int yn = std::min(y + 1, img.height() - 1);
  const double gx = img.at(xn, y) - img.at(x, y);
  const double gy = img.at(x, yn) - img.at(x, y);
  return std::hypot(gx, gy);
}

}  // namespace

RegionStats region_stats(const GrayImage& img, const Rect& r, RegionStatistic statistic) {
  if (!r.fits_in(img.width(), img.height())) fail(ErrorKind::invalid_argument, "region " + to_string(r) + " out of bounds");
  // Welford accumulation for both quantities.
  double mean = 0.0, var_mean = 0.0, m2 = 0.0;
  long long n = 0;
  for (int y = r.y; y < r.y + r.h; ++y) {
    for (int x = r.x; x < r.x + r.w; ++x) {
      ++n;
      const double v = img.at(x, y);
      mean += (v - mean) / static_cast<double>(n);
      const double s = statistic == RegionStatistic::intensity ? v : gradient_magnitude(img, x, y);
      const double d = s - var_mean;
      var_mean += d / static_cast<double>(n);
      m2 += d * (s - var_mean);
    }
  }
  return RegionStats{r, mean, std::max(0.0, m2 / static_cast<double>(n))};
}

bool passes_noise_gate(const RegionStats& s, double var_max, double mean_max) {
  return s.variance > 0.0 && s.variance < var_max && s.mean > 0.0 && s.mean < mean_max;
}

std::vector<RegionStats> qualifying_regions(const GrayImage& img, const NoiseSamplerConfig& cfg) {
  cfg.validate();
  std::vector<RegionStats> out;
  for (const Rect& r : partition_regions(img, cfg)) {
    RegionStats s = region_stats(img, r, cfg.statistic);
    if (passes_noise_gate(s, cfg.var_max, cfg.mean_max)) out.push_back(s);
  }
  return out;
}

NoiseField make_noise_field(const GrayImage& src, const Rect& r, int out_w, int out_h, std::string source_id) {
  return NoiseField{resize_bilinear(crop(src, r), out_w, out_h), std::move(source_id), r};
}

std::optional<RegionStats> select_noise_region(const GrayImage& img, const NoiseSamplerConfig& cfg, Rng& rng) {
  const std::vector<RegionStats> candidates = qualifying_regions(img, cfg);
  if (candidates.empty()) return std::nullopt;
  return candidates[uniform_index(rng, candidates.size())];
}

std::optional<NoiseField> select_noise_prone(const GrayImage& img, const NoiseSamplerConfig& cfg, Rng& rng, int out_w,
                                             int out_h, std::string source_id) {
  const auto chosen = select_noise_region(img, cfg, rng);
  if (!chosen) return std::nullopt;
  return make_noise_field(img, chosen->rect, out_w, out_h, std::move(source_id));
}

std::optional<NoiseField> select_noise_prone(const GrayImage& img, const NoiseSamplerConfig& cfg, Rng& rng,
                                             std::string source_id) {
  return select_noise_prone(img, cfg, rng, img.width(), img.height(), std::move(source_id));
}

GrayImage displace(const GrayImage& input, const GrayImage& noise, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::invalid_argument, "alpha must be in [0, 1]");
  if (!input.same_shape(noise)) {
    fail(ErrorKind::invalid_argument, "noise field " + std::to_string(noise.width()) + "x" +
                                          std::to_string(noise.height()) + " does not match input " +
                                          std::to_string(input.width()) + "x" + std::to_string(input.height()));
  }
  std::vector<double> out(input.size());
  const auto in = input.pixels();
  const auto nz = noise.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(alpha * nz[i] + (1.0 - alpha) * in[i], 0.0, 1.0);
  }
  return GrayImage(input.width(), input.height(), std::move(out));
}

GrayImage displace(const GrayImage& input, const NoiseField& noise, double alpha) {
  return displace(input, noise.image, alpha);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorKind::invalid_argument, "percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::invalid_argument, "percentile rank must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return std::lerp(values[lo], values[hi], pos - static_cast<double>(lo));
}

GateThresholds calibrate_thresholds(std::span<const GrayImage> corpus, int grid, RegionStatistic statistic,
                                    double var_percentile, double mean_percentile) {
  std::vector<double> vars, means;
  for (const GrayImage& img : corpus) {
    for (const Rect& r : partition_regions(img.width(), img.height(), grid)) {
      const RegionStats s = region_stats(img, r, statistic);
      vars.push_back(s.variance);
      means.push_back(s.mean);
    }
  }
  if (vars.empty()) fail(ErrorKind::invalid_argument, "cannot calibrate noise gate on an empty corpus");
  return GateThresholds{percentile(std::move(vars), var_percentile), percentile(std::move(means), mean_percentile)};
}

std::string to_string(RegionStatistic s) { return s == RegionStatistic::intensity ? "intensity" : "gradient"; }

RegionStatistic parse_region_statistic(const std::string& s) {
  if (s == "intensity") return RegionStatistic::intensity;
  if (s == "gradient") return RegionStatistic::gradient;
  fail(ErrorKind::invalid_argument, "statistic must be intensity or gradient, got '" + s + "'");
}

}  // namespace irsynth
