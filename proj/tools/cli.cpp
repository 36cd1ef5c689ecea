#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "irsynth/aff_check.hpp"
#include "irsynth/dataset.hpp"
#include "irsynth/image_io.hpp"
#include "irsynth/metrics.hpp"
#include "irsynth/negatives.hpp"
#include "irsynth/noise.hpp"
#include "irsynth/parallel.hpp"

namespace irsynth::cli {
namespace {

namespace fs = std::filesystem;

// Line-oriented key=value log records on the diagnostic stream.
class Log {
 public:
  Log(std::ostream& err, std::string cmd) : err_(err), cmd_(std::move(cmd)) {}

  void operator()(const char* level, const std::string& event, const std::string& fields = {}) const {
    err_ << "level=" << level << " cmd=" << cmd_ << " event=" << event;
    if (!fields.empty()) err_ << " " << fields;
    err_ << "\n";
  }

 private:
  std::ostream& err_;
  std::string cmd_;
};

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

struct Options {
  std::uint64_t seed = 0;
  std::string config;
  unsigned jobs = default_jobs();

  // sample-noise / displace / negaug
  std::string image, mask, noise, out;
  int width = 0, height = 0;

  // shared pipeline knobs
  double alpha = kDefaultAlpha;
  int s = kDefaultPatchSide;
  int grid = kDefaultGrid;
  std::optional<double> var_max, mean_max;
  std::size_t n_sources = kDefaultNoiseSources;
  std::string statistic = "intensity";

  // build
  std::string in_dir, out_dir;
  std::string negatives_from = "both";
  bool drop_identity = false;
  bool force = false;
  std::optional<long long> expect_total;

  // validate
  std::string dir;

  // evaluate
  std::string pred_dir, gt_dir, report;
  double max_dist = kDefaultMatchDistance;
  std::string fa_mode = "pixel";
  std::optional<double> soft_threshold;

  // aff-check
  std::string sizes = "4x8x8,1x8x8,16x16x16";
};

void add_config(CLI::App* sub, std::string& path) {
  sub->add_option("--config", path, "key=value file (keys are long flag names); command-line flags take precedence");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

// CLI11 only honours config files on the root app, so a subcommand's --config is
// expanded by hand: every key the command line does not already set is appended
// as "--key value". A "[section]" header other than the subcommand's own is skipped.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  std::size_t sub_at = 1;
  while (sub_at < args.size() && args[sub_at].starts_with("-")) ++sub_at;
  if (sub_at >= args.size()) return args;
  const CLI::App* sub = nullptr;
  for (const CLI::App* s : app.get_subcommands({}))
    if (s->get_name() == args[sub_at]) sub = s;
  if (sub == nullptr) return args;

  std::optional<std::string> path;
  auto given = [&](const std::string& flag) {
    for (std::size_t i = sub_at + 1; i < args.size(); ++i)
      if (args[i] == flag || args[i].starts_with(flag + "=")) return true;
    return false;
  };
  for (std::size_t i = sub_at + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (!path) return args;

  std::ifstream in(*path);
  if (!in) fail(ErrorKind::io, "cannot read config file " + *path);
  std::string line, section;
  std::vector<std::string> extra;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    if (!section.empty() && section != sub->get_name()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::invalid_argument, *path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    const CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option(flag);
    } catch (const CLI::OptionNotFound&) {
      fail(ErrorKind::invalid_argument, *path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " +
                                            sub->get_name());
    }
    if (key == "config" || given(flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1" || value == "yes" || value == "on") extra.push_back(flag);
      else if (!(value == "false" || value == "0" || value == "no" || value == "off"))
        fail(ErrorKind::invalid_argument, *path + ":" + std::to_string(lineno) + ": '" + key + "' takes true/false");
    } else {
      extra.push_back(flag + "=" + value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void add_seed(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "random seed; fixed seed gives byte-identical output")->capture_default_str();
}

void add_jobs(CLI::App* sub, Options& o) {
  sub->add_option("--jobs", o.jobs, "worker threads for per-image work (default: machine parallelism)")
      ->check(CLI::Range(1u, 4096u))
      ->capture_default_str();
}

void add_gate(CLI::App* sub, Options& o) {
  sub->add_option("--grid", o.grid, "regions per side; 8 gives 64 regions of h/8 x w/8")
      ->check(CLI::Range(1, 1 << 16))
      ->capture_default_str();
  sub->add_option("--var-max", o.var_max,
                  "noise gate upper variance bound, working scale [0,1]^2 "
                  "(default: 25th percentile of region variances)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--mean-max", o.mean_max,
                  "noise gate upper mean bound, working scale [0,1] (default: median region mean)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--statistic", o.statistic, "variance measured over raw intensity or gradient magnitude")
      ->check(CLI::IsMember({"intensity", "gradient"}))
      ->capture_default_str();
}

void add_alpha(CLI::App* sub, Options& o) {
  sub->add_option("--alpha", o.alpha, "noise blend weight in [0,1] (default 0.1, best value in the noise-weight ablation)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void add_patch_side(CLI::App* sub, Options& o) {
  sub->add_option("--s", o.s, "odd anchor patch side (default 3, best value in the patch-size ablation)")
      ->check(CLI::Range(1, 1 << 15))
      ->check(CLI::Validator([](std::string& v) { return std::stoi(v) % 2 == 1 ? std::string() : "s must be odd"; },
                             "ODD"))
      ->capture_default_str();
}

int cmd_sample_noise(const Options& o, std::ostream& out, const Log& log) {
  const GrayImage img = load_image(o.image);
  NoiseSamplerConfig cfg;
  cfg.grid = o.grid;
  cfg.statistic = parse_region_statistic(o.statistic);
  if (!o.var_max || !o.mean_max) {
    const GrayImage corpus[] = {img};
    const GateThresholds t = calibrate_thresholds(corpus, o.grid, cfg.statistic);
    cfg.var_max = o.var_max.value_or(t.var_max);
    cfg.mean_max = o.mean_max.value_or(t.mean_max);
    if (!(cfg.var_max > 0.0) || !(cfg.mean_max > 0.0)) {
      log("warn", "degenerate_gate", "var_max=" + format_double(cfg.var_max) + " mean_max=" + format_double(cfg.mean_max));
      out << "selected=none\n";
      return kOk;
    }
  } else {
    cfg.var_max = *o.var_max;
    cfg.mean_max = *o.mean_max;
  }
  Rng rng(o.seed);
  const auto region = select_noise_region(img, cfg, rng);
  out << "var_max=" << format_double(cfg.var_max) << "\nmean_max=" << format_double(cfg.mean_max) << "\n";
  if (!region) {
    out << "selected=none\n";
    log("info", "no_qualifying_region");
    return kOk;
  }
  out << "selected=" << to_string(region->rect) << "\nmean=" << format_double(region->mean)
      << "\nvariance=" << format_double(region->variance) << "\n";
  if (!o.out.empty()) {
    const int w = o.width > 0 ? o.width : img.width();
    const int h = o.height > 0 ? o.height : img.height();
    save_image(make_noise_field(img, region->rect, w, h).image, o.out);
    log("info", "wrote", "path=" + quoted(o.out));
  }
  return kOk;
}

int cmd_displace(const Options& o, std::ostream& out, const Log& log) {
  const GrayImage img = load_image(o.image);
  const GrayImage noise = load_image(o.noise);
  save_image(displace(img, noise, o.alpha), o.out);
  out << "wrote=" << o.out << "\n";
  log("info", "wrote", "path=" + quoted(o.out) + " alpha=" + format_double(o.alpha));
  return kOk;
}

int cmd_negaug(const Options& o, std::ostream& out, const Log& log) {
  const GrayImage img = load_image(o.image);
  const Mask mask = load_mask(o.mask);
  const auto targets = extract_targets(mask);
  const NegativeSet set = make_negatives(img, mask, targets, o.s);
  const fs::path root(o.out);
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  const std::string stem = fs::path(o.image).stem().string();
  for (const auto& sk : set.skipped) {
    log("warn", "overlapping_anchor",
        "target=" + std::to_string(sk.target_id) + " overlaps=" + std::to_string(sk.overlaps_with));
  }
  for (const auto& v : set.variants) {
    const std::string id = variant_id(stem, 0.0, v.target_id, v.beta);
    save_image(v.image, root / "images" / (id + ".png"));
    save_mask(v.mask, root / "masks" / (id + ".png"));
    out << id << "\t" << to_string(v.anchor.rect) << "\n";
  }
  out << "targets=" << targets.size() << "\nvariants=" << set.variants.size() << "\nskipped=" << set.skipped.size()
      << "\n";
  return kOk;
}

int cmd_build(const Options& o, std::ostream& out, const Log& log) {
  BuildConfig cfg;
  cfg.alpha = o.alpha;
  cfg.s = o.s;
  cfg.grid = o.grid;
  cfg.var_max = o.var_max;
  cfg.mean_max = o.mean_max;
  cfg.n_sources = o.n_sources;
  cfg.statistic = parse_region_statistic(o.statistic);
  cfg.negatives_from = parse_negatives_from(o.negatives_from);
  cfg.drop_identity = o.drop_identity;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.overwrite = o.force;
  cfg.expect_total = o.expect_total;
  const DatasetManifest m = build_dataset(o.in_dir, o.out_dir, cfg);
  for (const auto& sk : m.skipped) {
    log("warn", "overlapping_anchor",
        "image=" + sk.image_id + " target=" + std::to_string(sk.target_id) + " overlaps=" + std::to_string(sk.overlaps_with));
  }
  out << "originals=" << m.counts.originals << "\nnoise_variants=" << m.counts.noise_variants
      << "\nnegatives=" << m.counts.negatives << "\ntotal=" << m.counts.total << "\nvar_max=" << format_double(m.var_max)
      << "\nmean_max=" << format_double(m.mean_max) << "\n";
  if (o.expect_total) {
    const bool match = *o.expect_total == m.counts.total;
    out << "expected_total=" << *o.expect_total << "\nexpected_total_match=" << (match ? "yes" : "no") << "\n";
    log(match ? "info" : "warn", "expected_total",
        "expected=" + std::to_string(*o.expect_total) + " achieved=" + std::to_string(m.counts.total));
  }
  log("info", "built", "out=" + quoted(o.out_dir) + " total=" + std::to_string(m.counts.total));
  return kOk;
}

int print_checks(const std::vector<CheckResult>& checks, std::ostream& out) {
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << " " << c.detail;
    out << "\n";
    for (const auto& f : c.failures) out << "  - " << f << "\n";
  }
  return all_passed(checks) ? kOk : kFailedCheck;
}

int cmd_validate(const Options& o, std::ostream& out, const Log& log) {
  const ValidationReport r = validate_dataset(o.dir);
  log(r.passed() ? "info" : "warn", "validated", std::string("passed=") + (r.passed() ? "1" : "0"));
  return print_checks(r.checks, out);
}

int cmd_evaluate(const Options& o, std::ostream& out, const Log& log) {
  EvaluateOptions opts;
  opts.criterion.max_centroid_dist = o.max_dist;
  opts.fa_mode = parse_false_alarm_mode(o.fa_mode);
  opts.soft_threshold = o.soft_threshold;
  opts.jobs = o.jobs;
  const MetricsReport r = evaluate_report(o.pred_dir, o.gt_dir, opts);
  const std::string text = format_report(r);
  out << text;
  if (!o.report.empty()) {
    std::ofstream f(o.report, std::ios::binary);
    if (!f || !(f << text)) fail(ErrorKind::io, "cannot write report " + o.report);
    log("info", "wrote", "path=" + quoted(o.report));
  }
  return kOk;
}

int cmd_aff_check(const Options& o, std::ostream& out, const Log&) {
  return print_checks(run_aff_checks(o.seed, parse_shapes(o.sizes)), out);
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return kUsage;
    case ErrorKind::io: return kIo;
    case ErrorKind::format:
    case ErrorKind::validation: return kBadData;
  }
  return kInternal;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Infrared small-target dataset synthesis and evaluation toolkit", "irsynth"};
  app.require_subcommand(1);
  app.fallthrough(false);

  auto* sample = app.add_subcommand("sample-noise", "select a noise-prone region and optionally write its full-frame noise field");
  sample->add_option("--image", o.image, "input raster")->required();
  sample->add_option("--out", o.out, "write the resized noise field here");
  sample->add_option("--width", o.width, "noise field width (default: image width)")->check(CLI::PositiveNumber);
  sample->add_option("--height", o.height, "noise field height (default: image height)")->check(CLI::PositiveNumber);
  add_gate(sample, o);
  add_seed(sample, o);
  add_config(sample, o.config);

  auto* disp = app.add_subcommand("displace", "blend a noise field into an image");
  disp->add_option("--image", o.image, "input raster")->required();
  disp->add_option("--noise", o.noise, "noise field raster with the same dimensions")->required();
  disp->add_option("--out", o.out, "output raster")->required();
  add_alpha(disp, o);
  add_config(disp, o.config);

  auto* neg = app.add_subcommand("negaug", "write the rotated-anchor negatives of one image/mask pair");
  neg->add_option("--image", o.image, "input raster")->required();
  neg->add_option("--mask", o.mask, "binary mask raster")->required();
  neg->add_option("--out", o.out, "output directory (images/ and masks/ are created)")->required();
  add_patch_side(neg, o);
  add_config(neg, o.config);

  auto* build = app.add_subcommand("build", "synthesise a dataset: originals, noise variants and negatives");
  build->add_option("--in", o.in_dir, "input root with images/ and masks/")->required();
  build->add_option("--out", o.out_dir, "output root")->required();
  add_alpha(build, o);
  add_patch_side(build, o);
  add_gate(build, o);
  build->add_option("--n-sources", o.n_sources, "noise source images drawn from the corpus")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40))
      ->capture_default_str();
  build->add_option("--negatives-from", o.negatives_from, "which images feed negative augmentation")
      ->check(CLI::IsMember({"originals", "mixed", "both"}))
      ->capture_default_str();
  build->add_flag("--drop-identity", o.drop_identity, "omit the 0-degree copies of each negative set");
  build->add_flag("--force", o.force, "replace a dataset already present in --out");
  build->add_option("--expect-total", o.expect_total, "report whether the total matches this count (informational)");
  add_seed(build, o);
  add_jobs(build, o);
  add_config(build, o.config);

  auto* val = app.add_subcommand("validate", "re-check every invariant of a built dataset");
  val->add_option("--dir", o.dir, "dataset root")->required();
  add_config(val, o.config);

  auto* eval = app.add_subcommand("evaluate", "IoU / Pd / Fa of predicted masks against ground truth");
  eval->add_option("--pred", o.pred_dir, "directory of predicted masks")->required();
  eval->add_option("--gt", o.gt_dir, "directory of ground-truth masks")->required();
  eval->add_option("--max-dist", o.max_dist, "centroid match distance in pixels")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  eval->add_option("--report", o.report, "also write the report to this file");
  eval->add_option("--fa-mode", o.fa_mode, "false pixel rule")
      ->check(CLI::IsMember({"pixel", "component"}))
      ->capture_default_str();
  eval->add_option("--soft-threshold", o.soft_threshold, "threshold gray predictions instead of reading binary masks")
      ->check(CLI::Range(0.0, 1.0));
  add_jobs(eval, o);
  add_config(eval, o.config);

  auto* aff = app.add_subcommand("aff-check", "gradient and invariant checks of the attention and Soft-IoU kernels");
  aff->add_option("--sizes", o.sizes, "comma-separated CxHxW shapes")->capture_default_str();
  add_seed(aff, o);
  add_config(aff, o.config);

  std::vector<std::string> args;
  try {
    args = expand_config(app, std::vector<std::string>(argv, argv + argc));
  } catch (const Error& e) {
    err << "level=error cmd=config event=" << to_string(e.kind()) << " message=" << quoted(e.what()) << "\n";
    return exit_code_for(e.kind());
  }
  std::vector<const char*> expanded;
  for (const auto& a : args) expanded.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(expanded.size()), expanded.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const Log log(err, chosen->get_name());
  try {
    if (chosen == sample) return cmd_sample_noise(o, out, log);
    if (chosen == disp) return cmd_displace(o, out, log);
    if (chosen == neg) return cmd_negaug(o, out, log);
    if (chosen == build) return cmd_build(o, out, log);
    if (chosen == val) return cmd_validate(o, out, log);
    if (chosen == eval) return cmd_evaluate(o, out, log);
    if (chosen == aff) return cmd_aff_check(o, out, log);
  } catch (const Error& e) {
    log("error", to_string(e.kind()), "message=" + quoted(e.what()));
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    log("error", "io", "message=" + quoted(e.what()));
    return kIo;
  } catch (const std::exception& e) {
    log("error", "internal", "message=" + quoted(e.what()));
    return kInternal;
  }
  return kUsage;
}

}  // namespace irsynth::cli
