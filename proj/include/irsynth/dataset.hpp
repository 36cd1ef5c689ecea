#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irsynth/check.hpp"
#include "irsynth/image.hpp"
#include "irsynth/negatives.hpp"
#include "irsynth/noise.hpp"

namespace irsynth {

inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr const char* kManifestVersion = "v1";

/// Which images feed negative augmentation.
enum class NegativesFrom { originals, mixed, both };

std::string to_string(NegativesFrom n);
NegativesFrom parse_negatives_from(const std::string& s);

struct BuildConfig {
  double alpha = kDefaultAlpha;
  int s = kDefaultPatchSide;
  int grid = kDefaultGrid;
  std::optional<double> var_max;   // calibrated from the corpus when unset
  std::optional<double> mean_max;  // calibrated from the corpus when unset
  std::size_t n_sources = kDefaultNoiseSources;
  RegionStatistic statistic = RegionStatistic::intensity;
  NegativesFrom negatives_from = NegativesFrom::both;
  bool drop_identity = false;  // omit the beta = 0 copies
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool overwrite = false;                 // clear a previous build in out_dir
  std::optional<long long> expect_total;  // informational target total

  void validate() const;
};

enum class EntryKind { original, noise, negative };
std::string to_string(EntryKind k);

/// One manifest row: provenance of one image/mask pair on disk.
struct AugmentationRecord {
  EntryKind kind = EntryKind::original;
  std::string output_id;
  std::string source_id;  // stem of the original the row descends from
  std::string parent_id;  // output_id of the image this row was derived from; empty for originals
  double alpha = 0.0;     // noise weight baked into the pixels, 0 if none
  std::optional<int> target_id;
  int beta = 0;
  std::string image;  // relative to the dataset root
  std::string mask;
  long long fg_pixels = 0;
  std::optional<Rect> anchor;  // negatives only
  std::string noise_source;    // noise variants only
  std::optional<Rect> noise_rect;

  bool operator==(const AugmentationRecord&) const = default;
};

struct SkipRecord {
  std::string image_id;
  int target_id = 0;
  int overlaps_with = 0;
  bool operator==(const SkipRecord&) const = default;
};

struct DatasetCounts {
  long long originals = 0;
  long long noise_variants = 0;
  long long negatives = 0;
  long long total = 0;
  bool operator==(const DatasetCounts&) const = default;
};

struct DatasetManifest {
  std::string version = kManifestVersion;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  int s = 0;
  int grid = 0;
  double var_max = 0.0;
  double mean_max = 0.0;
  bool thresholds_calibrated = false;
  std::size_t n_sources = 0;
  RegionStatistic statistic = RegionStatistic::intensity;
  NegativesFrom negatives_from = NegativesFrom::both;
  bool drop_identity = false;
  DatasetCounts counts;
  std::vector<AugmentationRecord> entries;
  std::vector<SkipRecord> skipped;

  bool operator==(const DatasetManifest&) const = default;
};

DatasetCounts count_entries(const std::vector<AugmentationRecord>& entries);

/// Tab-separated text: '#key<TAB>value' header lines, a '#columns' line,
/// then one row per entry.
std::string serialize_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(const std::string& text);
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// `<stem>__a<alpha>__t<target|none>__b<beta>`.
std::string variant_id(const std::string& stem, double alpha, std::optional<int> target, int beta);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

/// Expects in_dir/images and in_dir/masks holding rasters with matching
/// stems. Writes out_dir/images, out_dir/masks and out_dir/manifest.tsv.
DatasetManifest build_dataset(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                              const BuildConfig& cfg);

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool passed() const { return all_passed(checks); }
};

/// Re-derives counts and re-checks every per-entry invariant on disk.
/// Throws ErrorKind::io when the manifest is missing.
ValidationReport validate_dataset(const std::filesystem::path& dir);

}  // namespace irsynth
