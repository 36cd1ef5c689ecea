#include "irsynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "irsynth/image_io.hpp"
#include "irsynth/parallel.hpp"

namespace irsynth {
namespace {

void require_same_shape(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::invalid_argument, "mask dimensions differ: " + std::to_string(a.width()) + "x" +
                                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                          std::to_string(b.height()));
  }
}

double ratio_or(long long num, long long den, double empty_value) {
  return den == 0 ? empty_value : static_cast<double>(num) / static_cast<double>(den);
}

// Per-pixel component index (-1 for background) in extract_targets order.
std::vector<int> component_labels(const Mask& m) {
  std::vector<int> labels(m.size(), -1);
  const int w = m.width();
  std::vector<std::size_t> stack;
  int next = 0;
  for (std::size_t start = 0; start < m.size(); ++start) {
    if (!m.pixels()[start] || labels[start] >= 0) continue;
    labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int px = static_cast<int>(p % w), py = static_cast<int>(p / w);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= m.height()) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          if (m.pixels()[q] && labels[q] < 0) {
            labels[q] = next;
            stack.push_back(q);
          }
        }
      }
    }
    ++next;
  }
  return labels;
}

}  // namespace

MetricCounts& MetricCounts::operator+=(const MetricCounts& o) {
  intersection += o.intersection;
  union_ += o.union_;
  t_correct += o.t_correct;
  t_all += o.t_all;
  false_pixels += o.false_pixels;
  total_pixels += o.total_pixels;
  return *this;
}

double iou(const Mask& pred, const Mask& gt) {
  require_same_shape(pred, gt);
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.pixels()[i], g = gt.pixels()[i];
    inter += p && g;
    uni += p || g;
  }
  return ratio_or(inter, uni, 1.0);
}

std::vector<TargetMatch> match_targets(const std::vector<TargetInstance>& pred, const std::vector<TargetInstance>& gt,
                                       const MatchCriterion& crit) {
  if (!(crit.max_centroid_dist >= 0.0)) fail(ErrorKind::invalid_argument, "max_centroid_dist must be >= 0");
  std::vector<TargetMatch> candidates;
  for (const auto& g : gt) {
    for (const auto& p : pred) {
      const double d = std::hypot(g.centroid.x - p.centroid.x, g.centroid.y - p.centroid.y);
      if (d <= crit.max_centroid_dist) candidates.push_back(TargetMatch{g.id, p.id, d});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const TargetMatch& a, const TargetMatch& b) {
    return std::tie(a.distance, a.gt_id, a.pred_id) < std::tie(b.distance, b.gt_id, b.pred_id);
  });
  std::vector<bool> gt_used(gt.size()), pred_used(pred.size());
  std::vector<TargetMatch> out;
  for (const auto& c : candidates) {
    if (gt_used[c.gt_id] || pred_used[c.pred_id]) continue;
    gt_used[c.gt_id] = pred_used[c.pred_id] = true;
    out.push_back(c);
  }
  return out;
}

std::vector<TargetMatch> match_targets(const Mask& pred, const Mask& gt, const MatchCriterion& crit) {
  require_same_shape(pred, gt);
  return match_targets(extract_targets(pred), extract_targets(gt), crit);
}

double pd(const std::vector<TargetMatch>& matches, std::size_t gt_targets) {
  return ratio_or(static_cast<long long>(matches.size()), static_cast<long long>(gt_targets), 1.0);
}

long long false_pixel_count(const Mask& pred, const std::vector<TargetMatch>& matches, const Mask& gt,
                            FalseAlarmMode mode) {
  require_same_shape(pred, gt);
  const auto p = pred.pixels();
  const auto g = gt.pixels();
  long long n = 0;
  if (mode == FalseAlarmMode::pixel) {
    for (std::size_t i = 0; i < p.size(); ++i) n += p[i] && !g[i];
    return n;
  }
  const std::vector<int> labels = component_labels(pred);
  std::vector<bool> matched;
  for (const auto& m : matches) {
    if (m.pred_id >= static_cast<int>(matched.size())) matched.resize(m.pred_id + 1);
    matched[m.pred_id] = true;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i]) continue;
    const int l = labels[i];
    const bool is_matched = l < static_cast<int>(matched.size()) && matched[l];
    n += !is_matched || !g[i];
  }
  return n;
}

double fa(const Mask& pred, const std::vector<TargetMatch>& matches, const Mask& gt, FalseAlarmMode mode) {
  return ratio_or(false_pixel_count(pred, matches, gt, mode), static_cast<long long>(pred.size()), 0.0);
}

MetricCounts image_counts(const Mask& pred, const Mask& gt, const MatchCriterion& crit, FalseAlarmMode mode,
                          std::vector<TargetMatch>* matches_out) {
  require_same_shape(pred, gt);
  MetricCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.pixels()[i], g = gt.pixels()[i];
    c.intersection += p && g;
    c.union_ += p || g;
  }
  const auto gt_targets = extract_targets(gt);
  std::vector<TargetMatch> matches = match_targets(extract_targets(pred), gt_targets, crit);
  c.t_correct = static_cast<long long>(matches.size());
  c.t_all = static_cast<long long>(gt_targets.size());
  c.false_pixels = false_pixel_count(pred, matches, gt, mode);
  c.total_pixels = static_cast<long long>(pred.size());
  if (matches_out) *matches_out = std::move(matches);
  return c;
}

MetricsReport report_from_counts(const MetricCounts& c) {
  MetricsReport r;
  r.counts = c;
  r.iou = ratio_or(c.intersection, c.union_, 1.0);
  r.pd = ratio_or(c.t_correct, c.t_all, 1.0);
  r.fa = ratio_or(c.false_pixels, c.total_pixels, 0.0);
  return r;
}

MetricsReport evaluate_report(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              const EvaluateOptions& opts) {
  const auto preds = list_rasters_by_stem(pred_dir);
  const auto gts = list_rasters_by_stem(gt_dir);
  for (const auto& [stem, path] : preds) {
    if (!gts.count(stem)) fail(ErrorKind::validation, "prediction " + path.string() + " has no ground truth");
  }
  for (const auto& [stem, path] : gts) {
    if (!preds.count(stem)) fail(ErrorKind::validation, "ground truth " + path.string() + " has no prediction");
  }
  if (gts.empty()) fail(ErrorKind::validation, "no rasters found in " + gt_dir.string());

  std::vector<std::string> stems;
  for (const auto& kv : gts) stems.push_back(kv.first);
  std::vector<MetricCounts> counts(stems.size());
  std::vector<ImageMatches> matches(stems.size());
  parallel_for(stems.size(), opts.jobs, [&](std::size_t i) {
    const Mask gt = load_mask(gts.at(stems[i]));
    const Mask pred = opts.soft_threshold ? binarize(load_image(preds.at(stems[i])), *opts.soft_threshold)
                                          : load_mask(preds.at(stems[i]));
    if (!pred.same_shape(gt)) fail(ErrorKind::validation, "dimension mismatch for stem '" + stems[i] + "'");
    matches[i].stem = stems[i];
    counts[i] = image_counts(pred, gt, opts.criterion, opts.fa_mode, &matches[i].matches);
  });

  MetricCounts total;
  for (const auto& c : counts) total += c;
  MetricsReport r = report_from_counts(total);
  r.matches = std::move(matches);
  return r;
}

std::string format_report(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "iou=" << r.iou << "\n"
     << "pd=" << r.pd << "\n"
     << "fa=" << r.fa << "\n"
     << "iou_x1e2=" << r.iou * 1e2 << "\n"
     << "pd_x1e2=" << r.pd * 1e2 << "\n"
     << "fa_x1e6=" << r.fa * 1e6 << "\n"
     << "t_correct=" << r.counts.t_correct << "\n"
     << "t_all=" << r.counts.t_all << "\n"
     << "false_pixels=" << r.counts.false_pixels << "\n"
     << "total_pixels=" << r.counts.total_pixels << "\n"
     << "intersection=" << r.counts.intersection << "\n"
     << "union=" << r.counts.union_ << "\n"
     << "# matches: stem\tgt_id\tpred_id\tdistance\n";
  for (const auto& im : r.matches) {
    for (const auto& m : im.matches) {
      os << im.stem << "\t" << m.gt_id << "\t" << m.pred_id << "\t" << m.distance << "\n";
    }
  }
  return os.str();
}

std::string to_string(FalseAlarmMode m) { return m == FalseAlarmMode::pixel ? "pixel" : "component"; }

FalseAlarmMode parse_false_alarm_mode(const std::string& s) {
  if (s == "pixel") return FalseAlarmMode::pixel;
  if (s == "component") return FalseAlarmMode::component;
  fail(ErrorKind::invalid_argument, "fa mode must be pixel or component, got '" + s + "'");
}

}  // namespace irsynth
