#include <gtest/gtest.h>

#include <fstream>

#include "irsynth/dataset.hpp"
#include "test_support.hpp"

using namespace irsynth;
using irsynth::testing::TempDir;
namespace fs = std::filesystem;

namespace {

const CheckResult& check(const ValidationReport& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no check named " + name);
}

// One 64x64 image with a single 2x2 target and a quiet dark corner cell.
void single_image_input(const fs::path& dir, bool with_target = true) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  Rng rng(17);
  std::vector<std::uint8_t> codes(64 * 64), mask(64 * 64, 0);
  for (auto& c : codes) c = static_cast<std::uint8_t>(150 + uniform_index(rng, 80));
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) codes[y * 64 + x] = static_cast<std::uint8_t>(10 + uniform_index(rng, 3));
  if (with_target) {
    for (int y = 30; y < 32; ++y)
      for (int x = 40; x < 42; ++x) {
        mask[y * 64 + x] = 1;
        codes[y * 64 + x] = 255;
      }
  }
  save_image(image_from_u8(64, 64, codes), dir / "images" / "only.png");
  save_mask(Mask(64, 64, mask), dir / "masks" / "only.png");
}

BuildConfig gated(double var_max, double mean_max) {
  BuildConfig cfg;
  cfg.var_max = var_max;
  cfg.mean_max = mean_max;
  return cfg;
}

}  // namespace

TEST(VariantId, Format) {
  EXPECT_EQ(variant_id("img", 0.1, std::nullopt, 0), "img__a0.1__tnone__b0");
  EXPECT_EQ(variant_id("img", 0.0, 2, 270), "img__a0__t2__b270");
  EXPECT_EQ(format_double(0.25), "0.25");
  EXPECT_EQ(format_double(1e-6), "1e-06");
}

TEST(Manifest, SerializeParseRoundTrip) {
  DatasetManifest m;
  m.seed = 42;
  m.alpha = 0.1;
  m.s = 3;
  m.grid = 8;
  m.var_max = 1.0 / 3.0;
  m.mean_max = 0.2;
  m.thresholds_calibrated = true;
  m.n_sources = 5;
  m.statistic = RegionStatistic::gradient;
  m.negatives_from = NegativesFrom::mixed;
  m.entries.push_back(AugmentationRecord{EntryKind::original, "a", "a", "", 0.0, std::nullopt, 0, "images/a.png",
                                         "masks/a.png", 4, std::nullopt, "", std::nullopt});
  m.entries.push_back(AugmentationRecord{EntryKind::noise, "a__a0.1__tnone__b0", "a", "a", 0.1, std::nullopt, 0,
                                         "images/x.png", "masks/x.png", 4, std::nullopt, "b", Rect{8, 0, 8, 8}});
  m.entries.push_back(AugmentationRecord{EntryKind::negative, "a__a0.1__t0__b90", "a", "a__a0.1__tnone__b0", 0.1, 0,
                                         90, "images/y.png", "masks/y.png", 4, Rect{1, 2, 3, 3}, "", std::nullopt});
  m.skipped.push_back(SkipRecord{"a", 1, 2});
  m.counts = count_entries(m.entries);
  EXPECT_EQ(m.counts, (DatasetCounts{1, 1, 1, 3}));

  const std::string text = serialize_manifest(m);
  EXPECT_EQ(parse_manifest(text), m);
  EXPECT_EQ(serialize_manifest(parse_manifest(text)), text);
}

TEST(Manifest, ParseErrorsAreValidationErrors) {
  for (const std::string bad : {"", "#irsynth-manifest\tv9\n", "garbage\n"}) {
    try {
      parse_manifest(bad);
      ADD_FAILURE() << "accepted: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::validation);
    }
  }
}

TEST(Build, SingleImageCountsHandEnumerated) {
  TempDir tmp;
  single_image_input(tmp / "in");
  // Only the dark corner cell passes: mean ~11/255, variance ~ (1/255)^2.
  const DatasetManifest m = build_dataset(tmp / "in", tmp / "out", gated(0.001, 0.2));
  // original -> noise variant; 4 rotations of the target from each of the two.
  EXPECT_EQ(m.counts, (DatasetCounts{1, 1, 8, 10}));
  ASSERT_EQ(m.entries.size(), 10u);
  EXPECT_EQ(m.entries[1].noise_rect, (Rect{0, 0, 8, 8}));
  EXPECT_EQ(m.entries[1].output_id, "only__a0.1__tnone__b0");
  EXPECT_EQ(m.entries[2].output_id, "only__a0__t0__b0");
  EXPECT_EQ(m.entries[9].output_id, "only__a0.1__t0__b270");
  EXPECT_EQ(m.entries[9].parent_id, "only__a0.1__tnone__b0");
  EXPECT_TRUE(validate_dataset(tmp / "out").passed());
  EXPECT_EQ(read_manifest(tmp / "out" / kManifestName), m);

  // beta = 0 copies are bit-identical to their parents
  EXPECT_EQ(irsynth::testing::slurp(tmp / "out" / "images" / "only__a0__t0__b0.png"),
            irsynth::testing::slurp(tmp / "out" / "images" / "only.png"));
}

TEST(Build, NegativesFromAndDropIdentity) {
  TempDir tmp;
  single_image_input(tmp / "in");
  BuildConfig cfg = gated(0.001, 0.2);
  cfg.negatives_from = NegativesFrom::originals;
  EXPECT_EQ(build_dataset(tmp / "in", tmp / "o1", cfg).counts, (DatasetCounts{1, 1, 4, 6}));
  cfg.negatives_from = NegativesFrom::mixed;
  EXPECT_EQ(build_dataset(tmp / "in", tmp / "o2", cfg).counts, (DatasetCounts{1, 1, 4, 6}));
  cfg.negatives_from = NegativesFrom::both;
  cfg.drop_identity = true;
  EXPECT_EQ(build_dataset(tmp / "in", tmp / "o3", cfg).counts, (DatasetCounts{1, 1, 6, 8}));
  cfg.drop_identity = false;
  cfg.alpha = 0.0;  // no noise variants at all
  EXPECT_EQ(build_dataset(tmp / "in", tmp / "o4", cfg).counts, (DatasetCounts{1, 0, 4, 5}));
  for (const char* d : {"o1", "o2", "o3", "o4"}) EXPECT_TRUE(validate_dataset(tmp / d).passed()) << d;
}

TEST(Build, EmptyMaskPassesThrough) {
  TempDir tmp;
  single_image_input(tmp / "in", false);
  // Nothing qualifies under this gate, so there is no noise source either.
  const DatasetManifest m = build_dataset(tmp / "in", tmp / "out", gated(1e-9, 1e-9));
  EXPECT_EQ(m.counts, (DatasetCounts{1, 0, 0, 1}));
  EXPECT_TRUE(validate_dataset(tmp / "out").passed());
}

TEST(Build, DeterministicAcrossRunsAndJobs) {
  TempDir tmp;
  irsynth::testing::write_fixture(tmp / "in", 6, 64, 64, 5);
  BuildConfig cfg;
  cfg.seed = 7;
  build_dataset(tmp / "in", tmp / "a", cfg);
  cfg.jobs = 3;
  build_dataset(tmp / "in", tmp / "b", cfg);
  EXPECT_EQ(irsynth::testing::snapshot_tree(tmp / "a"), irsynth::testing::snapshot_tree(tmp / "b"));
  cfg.seed = 8;
  build_dataset(tmp / "in", tmp / "c", cfg);
  EXPECT_TRUE(validate_dataset(tmp / "c").passed());
}

TEST(Build, RefusesExistingDatasetUnlessOverwrite) {
  TempDir tmp;
  single_image_input(tmp / "in");
  BuildConfig cfg = gated(0.001, 0.2);
  build_dataset(tmp / "in", tmp / "out", cfg);
  try {
    build_dataset(tmp / "in", tmp / "out", cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
  cfg.overwrite = true;
  cfg.alpha = 0.0;
  EXPECT_EQ(build_dataset(tmp / "in", tmp / "out", cfg).counts.total, 5);
  EXPECT_TRUE(validate_dataset(tmp / "out").passed());  // no stale files left behind
}

TEST(Build, InputErrors) {
  TempDir tmp;
  fs::create_directories(tmp / "in" / "images");
  fs::create_directories(tmp / "in" / "masks");
  EXPECT_THROW(build_dataset(tmp / "in", tmp / "out", BuildConfig{}), Error);  // empty
  save_image(GrayImage(8, 8, 0.5), tmp / "in" / "images" / "a.png");
  EXPECT_THROW(build_dataset(tmp / "in", tmp / "out", BuildConfig{}), Error);  // unpaired
  save_mask(Mask(8, 9, std::uint8_t{0}), tmp / "in" / "masks" / "a.png");
  EXPECT_THROW(build_dataset(tmp / "in", tmp / "out", BuildConfig{}), Error);  // shape mismatch
  BuildConfig bad;
  bad.s = 4;
  EXPECT_THROW(build_dataset(tmp / "in", tmp / "out", bad), Error);
}

TEST(Build, ReservedSeparatorInStem) {
  TempDir tmp;
  fs::create_directories(tmp / "in" / "images");
  fs::create_directories(tmp / "in" / "masks");
  save_image(GrayImage(8, 8, 0.5), tmp / "in" / "images" / "a__b.png");
  save_mask(Mask(8, 8, std::uint8_t{0}), tmp / "in" / "masks" / "a__b.png");
  EXPECT_THROW(build_dataset(tmp / "in", tmp / "out", BuildConfig{}), Error);
}

TEST(Validate, MissingManifestIsIoError) {
  TempDir tmp;
  try {
    validate_dataset(tmp.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(Validate, TamperedCountFails) {
  TempDir tmp;
  single_image_input(tmp / "in");
  build_dataset(tmp / "in", tmp / "out", gated(0.001, 0.2));
  const fs::path mpath = tmp / "out" / kManifestName;
  std::string text = irsynth::testing::slurp(mpath);
  const auto pos = text.find("#total\t10\n");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "#total\t11\n");
  std::ofstream(mpath, std::ios::binary) << text;
  const ValidationReport r = validate_dataset(tmp / "out");
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(check(r, "counts").passed);
  EXPECT_TRUE(check(r, "foreground_preserved").passed);
}

TEST(Validate, CorruptedNegativeMaskIsOneFailure) {
  TempDir tmp;
  single_image_input(tmp / "in");
  build_dataset(tmp / "in", tmp / "out", gated(0.001, 0.2));
  const fs::path victim = tmp / "out" / "masks" / "only__a0__t0__b90.png";
  Mask m = load_mask(victim);
  std::vector<std::uint8_t> v(m.pixels().begin(), m.pixels().end());
  v[0] = 1;  // one extra foreground pixel far from the anchor
  save_mask(Mask(m.width(), m.height(), v), victim);

  const ValidationReport r = validate_dataset(tmp / "out");
  const CheckResult& fg = check(r, "foreground_preserved");
  EXPECT_FALSE(fg.passed);
  ASSERT_EQ(fg.failures.size(), 1u);
  EXPECT_NE(fg.failures[0].find("only__a0__t0__b90"), std::string::npos);
  EXPECT_TRUE(check(r, "counts").passed);
  EXPECT_TRUE(check(r, "files_on_disk").passed);
}

TEST(Validate, NonBinaryMaskAndStrayFile) {
  TempDir tmp;
  single_image_input(tmp / "in");
  build_dataset(tmp / "in", tmp / "out", gated(0.001, 0.2));
  std::vector<std::uint8_t> codes(64 * 64, 0);
  codes[0] = 100;
  codes[1] = 200;
  write_u8(U8Plane{64, 64, codes}, tmp / "out" / "masks" / "only__a0__t0__b180.png");
  save_image(GrayImage(4, 4, 0.0), tmp / "out" / "images" / "stray.png");
  const ValidationReport r = validate_dataset(tmp / "out");
  EXPECT_FALSE(check(r, "mask_binary").passed);
  EXPECT_EQ(check(r, "mask_binary").failures.size(), 1u);
  EXPECT_FALSE(check(r, "files_on_disk").passed);
}

TEST(Validate, RotatedContentMismatch) {
  TempDir tmp;
  single_image_input(tmp / "in");
  build_dataset(tmp / "in", tmp / "out", gated(0.001, 0.2));
  // Swap two rotations: locality still holds, rotation check catches it.
  const fs::path a = tmp / "out" / "images" / "only__a0__t0__b90.png";
  const fs::path b = tmp / "out" / "images" / "only__a0__t0__b270.png";
  const std::string ab = irsynth::testing::slurp(a), bb = irsynth::testing::slurp(b);
  std::ofstream(a, std::ios::binary) << bb;
  std::ofstream(b, std::ios::binary) << ab;
  const ValidationReport r = validate_dataset(tmp / "out");
  EXPECT_TRUE(check(r, "negative_locality").passed);
  EXPECT_FALSE(check(r, "negative_rotation").passed);
}
