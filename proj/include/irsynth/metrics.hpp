#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irsynth/image.hpp"
#include "irsynth/negatives.hpp"

namespace irsynth {

inline constexpr double kDefaultMatchDistance = 3.0;

struct MatchCriterion {
  double max_centroid_dist = kDefaultMatchDistance;
};

struct TargetMatch {
  int gt_id = 0;
  int pred_id = 0;
  double distance = 0.0;
};

/// How Fa's numerator is counted.
enum class FalseAlarmMode {
  pixel,      // predicted pixel outside gt foreground (default)
  component,  // every pixel of an unmatched predicted component, plus matched-component pixels outside gt
};

/// Pooled counts for one image or a whole corpus. Aggregation is a plain
/// sum, so it is associative and commutative.
struct MetricCounts {
  long long intersection = 0;
  long long union_ = 0;
  long long t_correct = 0;
  long long t_all = 0;
  long long false_pixels = 0;
  long long total_pixels = 0;

  MetricCounts& operator+=(const MetricCounts& o);
  bool operator==(const MetricCounts&) const = default;
};

struct ImageMatches {
  std::string stem;
  std::vector<TargetMatch> matches;
};

struct MetricsReport {
  double iou = 1.0;
  double pd = 1.0;
  double fa = 0.0;
  MetricCounts counts;
  std::vector<ImageMatches> matches;
};

/// |pred & gt| / |pred | gt|, 1 when both are empty.
double iou(const Mask& pred, const Mask& gt);

/// Greedy one-to-one assignment in ascending centroid distance (ties by gt
/// id, then pred id); pairs farther than the criterion stay unmatched.
std::vector<TargetMatch> match_targets(const std::vector<TargetInstance>& pred, const std::vector<TargetInstance>& gt,
                                       const MatchCriterion& crit);
std::vector<TargetMatch> match_targets(const Mask& pred, const Mask& gt, const MatchCriterion& crit);

/// Matched gt count over gt count; 1 when there are no gt targets.
double pd(const std::vector<TargetMatch>& matches, std::size_t gt_targets);

long long false_pixel_count(const Mask& pred, const std::vector<TargetMatch>& matches, const Mask& gt,
                            FalseAlarmMode mode = FalseAlarmMode::pixel);
double fa(const Mask& pred, const std::vector<TargetMatch>& matches, const Mask& gt,
          FalseAlarmMode mode = FalseAlarmMode::pixel);

MetricCounts image_counts(const Mask& pred, const Mask& gt, const MatchCriterion& crit,
                          FalseAlarmMode mode = FalseAlarmMode::pixel, std::vector<TargetMatch>* matches = nullptr);

/// Ratios from pooled counts, using the empty-set conventions above.
MetricsReport report_from_counts(const MetricCounts& c);

struct EvaluateOptions {
  MatchCriterion criterion;
  FalseAlarmMode fa_mode = FalseAlarmMode::pixel;
  // When set, predictions are read as gray maps and thresholded instead of
  // being parsed as binary masks.
  std::optional<double> soft_threshold;
  unsigned jobs = 1;
};

/// Pairs rasters in the two directories by stem and micro-averages.
MetricsReport evaluate_report(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              const EvaluateOptions& opts = {});

/// key=value summary (IoU x1e2, Pd x1e2, Fa x1e6 alongside raw ratios)
/// followed by a tab-separated match table.
std::string format_report(const MetricsReport& r);

std::string to_string(FalseAlarmMode m);
FalseAlarmMode parse_false_alarm_mode(const std::string& s);

}  // namespace irsynth
