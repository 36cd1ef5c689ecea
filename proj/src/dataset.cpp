#include "irsynth/dataset.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "irsynth/image_io.hpp"
#include "irsynth/parallel.hpp"

namespace irsynth {

namespace fs = std::filesystem;

std::string to_string(NegativesFrom n) {
  switch (n) {
    case NegativesFrom::originals: return "originals";
    case NegativesFrom::mixed: return "mixed";
    case NegativesFrom::both: return "both";
  }
  return "?";
}

NegativesFrom parse_negatives_from(const std::string& s) {
  if (s == "originals") return NegativesFrom::originals;
  if (s == "mixed") return NegativesFrom::mixed;
  if (s == "both") return NegativesFrom::both;
  fail(ErrorKind::invalid_argument, "negatives-from must be originals, mixed or both, got '" + s + "'");
}

void BuildConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::invalid_argument, "alpha must be in [0, 1]");
  if (s < 1 || s % 2 == 0) fail(ErrorKind::invalid_argument, "s must be an odd integer >= 1");
  if (grid < 1) fail(ErrorKind::invalid_argument, "grid must be >= 1");
  if (var_max && !(*var_max > 0.0)) fail(ErrorKind::invalid_argument, "var_max must be > 0");
  if (mean_max && !(*mean_max > 0.0)) fail(ErrorKind::invalid_argument, "mean_max must be > 0");
  if (n_sources < 1) fail(ErrorKind::invalid_argument, "n_sources must be >= 1");
}

std::string variant_id(const std::string& stem, double alpha, std::optional<int> target, int beta) {
  return stem + "__a" + format_double(alpha) + "__t" + (target ? std::to_string(*target) : std::string("none")) +
         "__b" + std::to_string(beta);
}

namespace {

struct Sample {
  std::string stem;
  fs::path image_path;
  fs::path mask_path;
  GrayImage image;
  Mask mask;
};

struct NoisePatch {
  std::string source_id;
  Rect rect;
  GrayImage patch;
};

// Everything one input image contributes, in manifest order.
struct ImageOutput {
  std::vector<AugmentationRecord> entries;
  std::vector<SkipRecord> skipped;
};

std::string image_rel(const std::string& file) { return "images/" + file; }
std::string mask_rel(const std::string& file) { return "masks/" + file; }

void prepare_out_dir(const fs::path& out_dir, bool overwrite) {
  std::error_code ec;
  if (fs::exists(out_dir)) {
    if (!fs::is_directory(out_dir)) fail(ErrorKind::io, "output path is not a directory: " + out_dir.string());
    const bool has_build = fs::exists(out_dir / "images") || fs::exists(out_dir / "masks") ||
                           fs::exists(out_dir / kManifestName);
    if (has_build) {
      if (!overwrite) fail(ErrorKind::io, "output directory already holds a dataset (use overwrite): " + out_dir.string());
      fs::remove_all(out_dir / "images", ec);
      fs::remove_all(out_dir / "masks", ec);
      fs::remove(out_dir / kManifestName, ec);
    }
  }
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "masks", ec);
  if (ec || !fs::is_directory(out_dir / "images") || !fs::is_directory(out_dir / "masks")) {
    fail(ErrorKind::io, "cannot create output directories under " + out_dir.string());
  }
}

std::vector<Sample> load_samples(const fs::path& in_dir, unsigned jobs) {
  const auto images = list_rasters_by_stem(in_dir / "images");
  const auto masks = list_rasters_by_stem(in_dir / "masks");
  for (const auto& [stem, path] : images) {
    if (!masks.count(stem)) fail(ErrorKind::validation, "image " + path.string() + " has no mask");
  }
  for (const auto& [stem, path] : masks) {
    if (!images.count(stem)) fail(ErrorKind::validation, "mask " + path.string() + " has no image");
  }
  if (images.empty()) fail(ErrorKind::validation, "no input images in " + (in_dir / "images").string());
  for (const auto& [stem, path] : images) {
    if (stem.find("__") != std::string::npos) {
      fail(ErrorKind::validation, "input stem '" + stem + "' contains the reserved separator '__'");
    }
  }

  std::vector<Sample> samples;
  for (const auto& [stem, path] : images) samples.push_back(Sample{stem, path, masks.at(stem), {}, {}});
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    Sample& s = samples[i];
    s.image = load_image(s.image_path);
    s.mask = load_mask(s.mask_path);
    if (!s.image.same_shape(s.mask)) fail(ErrorKind::validation, "image and mask dimensions differ for '" + s.stem + "'");
  });
  return samples;
}

// Seeded draw of n distinct indices from [0, total), kept in draw order.
std::vector<std::size_t> draw_sources(std::size_t total, std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, total);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

// Stream tags keep the sampling stream and per-image streams disjoint.
constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kImageStreamBase = 1;

}  // namespace

DatasetManifest build_dataset(const fs::path& in_dir, const fs::path& out_dir, const BuildConfig& cfg) {
  cfg.validate();
  std::vector<Sample> samples = load_samples(in_dir, cfg.jobs);

  DatasetManifest manifest;
  manifest.seed = cfg.seed;
  manifest.alpha = cfg.alpha;
  manifest.s = cfg.s;
  manifest.grid = cfg.grid;
  manifest.n_sources = std::min(cfg.n_sources, samples.size());
  manifest.statistic = cfg.statistic;
  manifest.negatives_from = cfg.negatives_from;
  manifest.drop_identity = cfg.drop_identity;

  // Gate thresholds: configured values win, the rest come from corpus percentiles.
  if (!cfg.var_max || !cfg.mean_max) {
    std::vector<GrayImage> corpus;
    corpus.reserve(samples.size());
    for (const auto& s : samples) corpus.push_back(s.image);
    const GateThresholds t = calibrate_thresholds(corpus, cfg.grid, cfg.statistic);
    manifest.var_max = cfg.var_max.value_or(t.var_max);
    manifest.mean_max = cfg.mean_max.value_or(t.mean_max);
    manifest.thresholds_calibrated = true;
  } else {
    manifest.var_max = *cfg.var_max;
    manifest.mean_max = *cfg.mean_max;
  }
  // A calibrated gate of 0 would reject everything; keep it strictly positive.
  if (!(manifest.var_max > 0.0) || !(manifest.mean_max > 0.0)) {
    manifest.var_max = std::max(manifest.var_max, std::numeric_limits<double>::min());
    manifest.mean_max = std::max(manifest.mean_max, std::numeric_limits<double>::min());
  }

  const NoiseSamplerConfig sampler{cfg.grid, manifest.var_max, manifest.mean_max, manifest.n_sources, cfg.statistic};
  sampler.validate();

  std::vector<NoisePatch> patches;
  if (cfg.alpha > 0.0) {
    Rng rng = derive_rng(cfg.seed, kNoiseStream);
    for (std::size_t j : draw_sources(samples.size(), manifest.n_sources, rng)) {
      const auto region = select_noise_region(samples[j].image, sampler, rng);
      if (region) patches.push_back(NoisePatch{samples[j].stem, region->rect, crop(samples[j].image, region->rect)});
    }
  }

  prepare_out_dir(out_dir, cfg.overwrite);
  const bool from_originals = cfg.negatives_from != NegativesFrom::mixed;
  const bool from_mixed = cfg.negatives_from != NegativesFrom::originals;

  std::vector<ImageOutput> outputs(samples.size());
  parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    const Sample& s = samples[i];
    ImageOutput& out = outputs[i];
    Rng rng = derive_rng(cfg.seed, kImageStreamBase + i);
    const long long fg = foreground_count(s.mask);

    const std::string img_file = s.image_path.filename().string();
    const std::string mask_file = s.mask_path.filename().string();
    fs::copy_file(s.image_path, out_dir / "images" / img_file, fs::copy_options::overwrite_existing);
    fs::copy_file(s.mask_path, out_dir / "masks" / mask_file, fs::copy_options::overwrite_existing);
    out.entries.push_back(AugmentationRecord{EntryKind::original, s.stem, s.stem, "", 0.0, std::nullopt, 0,
                                             image_rel(img_file), mask_rel(mask_file), fg, std::nullopt, "",
                                             std::nullopt});

    std::optional<GrayImage> mixed;
    std::string mixed_id;
    if (!patches.empty()) {
      const NoisePatch& np = patches[uniform_index(rng, patches.size())];
      mixed = displace(s.image, resize_bilinear(np.patch, s.image.width(), s.image.height()), cfg.alpha);
      mixed_id = variant_id(s.stem, cfg.alpha, std::nullopt, 0);
      save_image(*mixed, out_dir / "images" / (mixed_id + ".png"));
      save_mask(s.mask, out_dir / "masks" / (mixed_id + ".png"));
      out.entries.push_back(AugmentationRecord{EntryKind::noise, mixed_id, s.stem, s.stem, cfg.alpha, std::nullopt, 0,
                                               image_rel(mixed_id + ".png"), mask_rel(mixed_id + ".png"), fg,
                                               std::nullopt, np.source_id, np.rect});
    }

    const std::vector<TargetInstance> targets = extract_targets(s.mask);
    if (targets.empty()) return;
    auto emit = [&](const GrayImage& base, const std::string& parent, double alpha) {
      NegativeSet set = make_negatives(base, s.mask, targets, cfg.s);
      for (const auto& sk : set.skipped) out.skipped.push_back(SkipRecord{parent, sk.target_id, sk.overlaps_with});
      for (const auto& v : set.variants) {
        if (cfg.drop_identity && v.beta == 0) continue;
        const std::string id = variant_id(s.stem, alpha, v.target_id, v.beta);
        save_image(v.image, out_dir / "images" / (id + ".png"));
        save_mask(v.mask, out_dir / "masks" / (id + ".png"));
        out.entries.push_back(AugmentationRecord{EntryKind::negative, id, s.stem, parent, alpha, v.target_id, v.beta,
                                                 image_rel(id + ".png"), mask_rel(id + ".png"), foreground_count(v.mask),
                                                 v.anchor.rect, "", std::nullopt});
      }
    };
    if (from_originals) emit(s.image, s.stem, 0.0);
    if (from_mixed && mixed) emit(*mixed, mixed_id, cfg.alpha);
  });

  for (auto& o : outputs) {
    std::move(o.entries.begin(), o.entries.end(), std::back_inserter(manifest.entries));
    std::move(o.skipped.begin(), o.skipped.end(), std::back_inserter(manifest.skipped));
  }
  manifest.counts = count_entries(manifest.entries);
  write_manifest(manifest, out_dir / kManifestName);
  return manifest;
}

namespace {

class CheckBuilder {
 public:
  explicit CheckBuilder(std::string name) : name_(std::move(name)) {}
  void fail_item(std::string item) { failures_.push_back(std::move(item)); }
  CheckResult finish() {
    CheckResult r{name_, failures_.empty(), {}, std::move(failures_)};
    r.detail = r.passed ? "ok" : std::to_string(r.failures.size()) + " failing";
    return r;
  }

 private:
  std::string name_;
  std::vector<std::string> failures_;
};

struct LoadedEntry {
  std::optional<GrayImage> image;
  std::optional<Mask> mask;
  std::string error;
};

template <typename T>
bool same_outside(const Raster<T>& a, const Raster<T>& b, const Rect& r) {
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!r.contains(x, y) && a.at(x, y) != b.at(x, y)) return false;
    }
  }
  return true;
}

}  // namespace

ValidationReport validate_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) fail(ErrorKind::io, "missing manifest " + manifest_path.string());

  ValidationReport report;
  DatasetManifest m;
  try {
    m = read_manifest(manifest_path);
  } catch (const Error& e) {
    report.checks.push_back(CheckResult{"manifest_parse", false, e.what(), {}});
    return report;
  }
  report.checks.push_back(CheckResult{"manifest_parse", true, "ok", {}});

  {
    CheckBuilder c("counts");
    const DatasetCounts actual = count_entries(m.entries);
    if (m.counts.originals != actual.originals) c.fail_item("originals header " + std::to_string(m.counts.originals) + " != " + std::to_string(actual.originals));
    if (m.counts.noise_variants != actual.noise_variants) c.fail_item("noise_variants header " + std::to_string(m.counts.noise_variants) + " != " + std::to_string(actual.noise_variants));
    if (m.counts.negatives != actual.negatives) c.fail_item("negatives header " + std::to_string(m.counts.negatives) + " != " + std::to_string(actual.negatives));
    if (m.counts.total != actual.total) c.fail_item("total header " + std::to_string(m.counts.total) + " != " + std::to_string(actual.total));
    if (m.counts.total != m.counts.originals + m.counts.noise_variants + m.counts.negatives) c.fail_item("total != originals + noise_variants + negatives");
    report.checks.push_back(c.finish());
  }

  std::map<std::string, std::size_t> by_id;
  {
    CheckBuilder c("unique_ids");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      if (!by_id.emplace(m.entries[i].output_id, i).second) c.fail_item(m.entries[i].output_id);
    }
    report.checks.push_back(c.finish());
  }

  {
    CheckBuilder c("files_on_disk");
    std::set<std::string> referenced_images, referenced_masks;
    for (const auto& e : m.entries) {
      referenced_images.insert(fs::path(e.image).filename().string());
      referenced_masks.insert(fs::path(e.mask).filename().string());
    }
    auto scan = [&](const char* sub, const std::set<std::string>& referenced) {
      std::set<std::string> present;
      std::error_code ec;
      if (fs::is_directory(dir / sub, ec)) {
        for (const auto& entry : fs::directory_iterator(dir / sub)) {
          if (entry.is_regular_file()) present.insert(entry.path().filename().string());
        }
      }
      for (const auto& f : present) {
        if (!referenced.count(f)) c.fail_item(std::string(sub) + "/" + f + " not in manifest");
      }
      for (const auto& f : referenced) {
        if (!present.count(f)) c.fail_item(std::string(sub) + "/" + f + " missing");
      }
    };
    scan("images", referenced_images);
    scan("masks", referenced_masks);
    report.checks.push_back(c.finish());
  }

  std::vector<LoadedEntry> loaded(m.entries.size());
  {
    CheckBuilder load("files_load");
    CheckBuilder binary("mask_binary");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const auto& e = m.entries[i];
      try {
        loaded[i].image = load_image(dir / e.image);
      } catch (const Error& err) {
        load.fail_item(e.output_id + ": " + err.what());
      }
      try {
        loaded[i].mask = load_mask(dir / e.mask);
      } catch (const Error& err) {
        (err.kind() == ErrorKind::format && fs::exists(dir / e.mask) ? binary : load).fail_item(e.output_id + ": " + err.what());
      }
    }
    report.checks.push_back(load.finish());
    report.checks.push_back(binary.finish());
  }

  auto parent_of = [&](const AugmentationRecord& e) -> std::optional<std::size_t> {
    auto it = by_id.find(e.parent_id);
    if (it == by_id.end()) return std::nullopt;
    return it->second;
  };

  {
    CheckBuilder c("lineage");
    for (const auto& e : m.entries) {
      if (e.kind == EntryKind::original) {
        if (!e.parent_id.empty()) c.fail_item(e.output_id + ": original with a parent");
      } else if (!parent_of(e)) {
        c.fail_item(e.output_id + ": unknown parent '" + e.parent_id + "'");
      }
    }
    report.checks.push_back(c.finish());
  }

  {
    CheckBuilder c("beta_legal");
    for (const auto& e : m.entries) {
      if (!is_legal_beta(e.beta) || (e.kind != EntryKind::negative && e.beta != 0)) c.fail_item(e.output_id + ": beta " + std::to_string(e.beta));
    }
    report.checks.push_back(c.finish());
  }

  {
    CheckBuilder c("dimensions");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const auto& l = loaded[i];
      if (!l.image || !l.mask) continue;
      if (!l.image->same_shape(*l.mask)) c.fail_item(m.entries[i].output_id + ": image and mask differ");
      if (auto p = parent_of(m.entries[i]); p && loaded[*p].image && !l.image->same_shape(*loaded[*p].image)) {
        c.fail_item(m.entries[i].output_id + ": differs from parent " + m.entries[i].parent_id);
      }
    }
    report.checks.push_back(c.finish());
  }

  {
    CheckBuilder c("foreground_preserved");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const auto& e = m.entries[i];
      if (!loaded[i].mask) continue;
      const long long fg = foreground_count(*loaded[i].mask);
      bool ok = fg == e.fg_pixels;
      if (auto p = parent_of(e); p && loaded[*p].mask) ok = ok && fg == foreground_count(*loaded[*p].mask);
      if (!ok) c.fail_item(e.output_id + ": foreground " + std::to_string(fg) + " vs recorded " + std::to_string(e.fg_pixels));
    }
    report.checks.push_back(c.finish());
  }

  {
    CheckBuilder c("negative_locality");
    CheckBuilder rot("negative_rotation");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const auto& e = m.entries[i];
      if (e.kind != EntryKind::negative) continue;
      const auto p = parent_of(e);
      if (!e.anchor || !p || !loaded[i].image || !loaded[i].mask || !loaded[*p].image || !loaded[*p].mask) {
        c.fail_item(e.output_id + ": anchor or parent unavailable");
        continue;
      }
      const auto& img = *loaded[i].image;
      const auto& msk = *loaded[i].mask;
      const auto& pimg = *loaded[*p].image;
      const auto& pmsk = *loaded[*p].mask;
      if (!img.same_shape(pimg) || !msk.same_shape(pmsk) || !e.anchor->fits_in(img.width(), img.height()) ||
          e.anchor->w != e.anchor->h || !is_legal_beta(e.beta)) {
        c.fail_item(e.output_id + ": anchor incompatible with rasters");
        continue;
      }
      if (!same_outside(img, pimg, *e.anchor) || !same_outside(msk, pmsk, *e.anchor)) {
        c.fail_item(e.output_id + ": pixels changed outside anchor " + to_string(*e.anchor));
      }
      if (rotate_window(pimg, *e.anchor, e.beta) != img || rotate_window(pmsk, *e.anchor, e.beta) != msk) {
        rot.fail_item(e.output_id + ": anchor content is not the parent rotated by " + std::to_string(e.beta));
      }
    }
    report.checks.push_back(c.finish());
    report.checks.push_back(rot.finish());
  }
  return report;
}

}  // namespace irsynth
