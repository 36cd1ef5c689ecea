#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irsynth/image.hpp"
#include "irsynth/rng.hpp"

namespace irsynth {

inline constexpr int kDefaultGrid = 8;
inline constexpr double kDefaultAlpha = 0.1;
inline constexpr std::size_t kDefaultNoiseSources = 64;
// Percentiles used to derive gate thresholds when none are configured.
inline constexpr double kVarianceGatePercentile = 0.25;
inline constexpr double kMeanGatePercentile = 0.50;

/// What the variance half of the noise gate is measured over.
enum class RegionStatistic {
  intensity,  // raw pixel values (default)
  gradient,   // forward-difference gradient magnitude
};

struct NoiseSamplerConfig {
  int grid = kDefaultGrid;  // regions per side, grid * grid regions in total
  double var_max = 0.0;     // gate: 0 < variance < var_max
  double mean_max = 0.0;    // gate: 0 < mean < mean_max
  std::size_t n_sources = kDefaultNoiseSources;
  RegionStatistic statistic = RegionStatistic::intensity;

  /// Throws ErrorKind::invalid_argument naming the offending field.
  void validate() const;
};

struct RegionStats {
  Rect rect;
  double mean = 0.0;
  double variance = 0.0;
};

/// A full-frame noise raster plus where it came from.
struct NoiseField {
  GrayImage image;
  std::string source_id;
  Rect source_rect;
};

struct GateThresholds {
  double var_max = 0.0;
  double mean_max = 0.0;
};

/// grid x grid tiling in row-major order. Cells are floor(dim / grid) wide;
/// the last row and column absorb the remainder.
std::vector<Rect> partition_regions(int width, int height, int grid);
std::vector<Rect> partition_regions(const GrayImage& img, const NoiseSamplerConfig& cfg);

/// Population mean and variance over r, in working scale.
RegionStats region_stats(const GrayImage& img, const Rect& r,
                         RegionStatistic statistic = RegionStatistic::intensity);

bool passes_noise_gate(const RegionStats& s, double var_max, double mean_max);

/// Every region of img passing the gate, in partition order.
std::vector<RegionStats> qualifying_regions(const GrayImage& img, const NoiseSamplerConfig& cfg);

/// Uniform seeded choice among qualifying regions; nullopt (rng untouched)
/// when none qualifies.
std::optional<RegionStats> select_noise_region(const GrayImage& img, const NoiseSamplerConfig& cfg, Rng& rng);

/// Crops src at r and resamples it to out_w x out_h.
NoiseField make_noise_field(const GrayImage& src, const Rect& r, int out_w, int out_h, std::string source_id = {});

/// Picks one qualifying region uniformly with rng, crops it and resizes it
/// to out_w x out_h. Returns nullopt when no region qualifies; rng is not
/// advanced in that case.
std::optional<NoiseField> select_noise_prone(const GrayImage& img, const NoiseSamplerConfig& cfg, Rng& rng, int out_w,
                                             int out_h, std::string source_id = {});
/// Same, resized to img's own dimensions.
std::optional<NoiseField> select_noise_prone(const GrayImage& img, const NoiseSamplerConfig& cfg, Rng& rng,
                                             std::string source_id = {});

/// alpha * noise + (1 - alpha) * input per pixel, clamped to [0, 1].
GrayImage displace(const GrayImage& input, const GrayImage& noise, double alpha);
GrayImage displace(const GrayImage& input, const NoiseField& noise, double alpha);

/// Linear-interpolated quantile (q in [0, 1]) of values; values must be nonempty.
double percentile(std::vector<double> values, double q);

/// Data-driven gate: var_max and mean_max at the given percentiles of all
/// region statistics across the corpus.
GateThresholds calibrate_thresholds(std::span<const GrayImage> corpus, int grid,
                                    RegionStatistic statistic = RegionStatistic::intensity,
                                    double var_percentile = kVarianceGatePercentile,
                                    double mean_percentile = kMeanGatePercentile);

std::string to_string(RegionStatistic s);
RegionStatistic parse_region_statistic(const std::string& s);

}  // namespace irsynth
