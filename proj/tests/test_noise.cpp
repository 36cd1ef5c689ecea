#include <gtest/gtest.h>

#include <set>

#include "irsynth/noise.hpp"
#include "test_support.hpp"

using namespace irsynth;
using irsynth::testing::two_pass_stats;

namespace {

NoiseSamplerConfig gate(double var_max, double mean_max, int grid = 8) {
  NoiseSamplerConfig cfg;
  cfg.grid = grid;
  cfg.var_max = var_max;
  cfg.mean_max = mean_max;
  return cfg;
}

// Count how many rects cover each pixel; a tiling covers each exactly once.
void expect_tiling(int w, int h, const std::vector<Rect>& rects) {
  std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
  for (const Rect& r : rects)
    for (int y = r.y; y < r.y + r.h; ++y)
      for (int x = r.x; x < r.x + r.w; ++x) ++cover[static_cast<std::size_t>(y) * w + x];
  for (int c : cover) ASSERT_EQ(c, 1);
}

}  // namespace

TEST(Partition, PaperGrid) {
  const auto rects = partition_regions(256, 256, 8);
  ASSERT_EQ(rects.size(), 64u);
  for (const Rect& r : rects) {
    EXPECT_EQ(r.w, 32);
    EXPECT_EQ(r.h, 32);
  }
  expect_tiling(256, 256, rects);
}

TEST(Partition, DegenerateAndRemainder) {
  auto rects = partition_regions(8, 8, 8);
  ASSERT_EQ(rects.size(), 64u);
  for (const Rect& r : rects) EXPECT_EQ(r.area(), 1);

  rects = partition_regions(10, 10, 8);
  ASSERT_EQ(rects.size(), 64u);
  expect_tiling(10, 10, rects);
  for (int i = 0; i < 64; ++i) {
    const bool last_col = i % 8 == 7, last_row = i / 8 == 7;
    EXPECT_EQ(rects[i].w, last_col ? 3 : 1);
    EXPECT_EQ(rects[i].h, last_row ? 3 : 1);
  }
}

TEST(Partition, TilesArbitraryShapes) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const int grid = 1 + static_cast<int>(uniform_index(rng, 9));
    const int w = grid + static_cast<int>(uniform_index(rng, 40)), h = grid + static_cast<int>(uniform_index(rng, 40));
    const auto rects = partition_regions(w, h, grid);
    ASSERT_EQ(rects.size(), static_cast<std::size_t>(grid * grid));
    expect_tiling(w, h, rects);
  }
  EXPECT_THROW(partition_regions(7, 8, 8), Error);
  EXPECT_THROW(partition_regions(8, 8, 0), Error);
}

TEST(RegionStats, ClosedForms) {
  const GrayImage c(4, 4, 0.3);
  const RegionStats s = region_stats(c, c.bounds());
  EXPECT_DOUBLE_EQ(s.mean, 0.3);
  EXPECT_EQ(s.variance, 0.0);

  const GrayImage two(2, 1, std::vector<double>{0.0, 1.0});
  const RegionStats t = region_stats(two, two.bounds());
  EXPECT_DOUBLE_EQ(t.mean, 0.5);
  EXPECT_DOUBLE_EQ(t.variance, 0.25);
}

TEST(RegionStats, MatchesTwoPassOracle) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const GrayImage img = irsynth::testing::random_real_image(32, 32, rng);
    const RegionStats s = region_stats(img, img.bounds());
    const auto [mean, var] = two_pass_stats(img, img.bounds());
    EXPECT_NEAR(s.mean, mean, 1e-12 * mean);
    EXPECT_NEAR(s.variance, var, 1e-12 * var);
    EXPECT_GE(s.variance, 0.0);
  }
}

TEST(RegionStats, GradientStatistic) {
  // Horizontal ramp: forward differences are constant, so the gradient
  // variance vanishes away from the clamped right edge.
  std::vector<double> v(16);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) v[y * 4 + x] = 0.1 * x;
  const GrayImage ramp(4, 4, v);
  const RegionStats s = region_stats(ramp, Rect{0, 0, 3, 4}, RegionStatistic::gradient);
  EXPECT_NEAR(s.variance, 0.0, 1e-15);
  EXPECT_NEAR(s.mean, 0.1, 1e-12);  // mean stays an intensity mean
  EXPECT_GT(region_stats(ramp, ramp.bounds(), RegionStatistic::gradient).variance, 0.0);
}

TEST(Gate, StrictInequalities) {
  EXPECT_FALSE(passes_noise_gate({Rect{}, 0.1, 0.0}, 0.01, 0.2));
  EXPECT_FALSE(passes_noise_gate({Rect{}, 0.0, 0.001}, 0.01, 0.2));
  EXPECT_FALSE(passes_noise_gate({Rect{}, 0.2, 0.001}, 0.01, 0.2));
  EXPECT_FALSE(passes_noise_gate({Rect{}, 0.1, 0.01}, 0.01, 0.2));
  EXPECT_TRUE(passes_noise_gate({Rect{}, 0.1, 0.001}, 0.01, 0.2));
}

TEST(Select, ConstantImageHasNone) {
  const GrayImage img(64, 64, 0.1);
  Rng rng(0);
  const Rng before = rng;
  EXPECT_FALSE(select_noise_region(img, gate(0.01, 0.2), rng).has_value());
  EXPECT_EQ(rng, before);
  EXPECT_FALSE(select_noise_prone(img, gate(0.01, 0.2), rng).has_value());
}

TEST(Select, SingleQualifyingRegionChosenDeterministically) {
  // 256x256, region 13 holds mean 0.1 / variance 0.001 (checkerboard
  // 0.1 +- sqrt(0.001)), everything else saturated bright.
  const double d = std::sqrt(0.001);
  std::vector<double> v(256 * 256, 1.0);
  const Rect target = partition_regions(256, 256, 8)[13];
  for (int y = target.y; y < target.y + target.h; ++y)
    for (int x = target.x; x < target.x + target.w; ++x) v[y * 256 + x] = ((x + y) % 2) ? 0.1 + d : 0.1 - d;
  const GrayImage img(256, 256, v);
  const RegionStats s = region_stats(img, target);
  EXPECT_NEAR(s.mean, 0.1, 1e-12);
  EXPECT_NEAR(s.variance, 0.001, 1e-12);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto field = select_noise_prone(img, gate(0.01, 0.2), rng, "src");
    ASSERT_TRUE(field.has_value());
    EXPECT_EQ(field->source_rect, target);
    EXPECT_EQ(field->source_id, "src");
    EXPECT_EQ(field->image.width(), 256);
    EXPECT_EQ(field->image.height(), 256);
  }
}

TEST(Select, UniformAmongQualifying) {
  // Every region qualifies; selection frequencies should be flat.
  Rng data(4);
  std::vector<double> v(64 * 64);
  for (auto& x : v) x = 0.05 + 0.01 * uniform01(data);
  const GrayImage img(64, 64, v);
  ASSERT_EQ(qualifying_regions(img, gate(1.0, 1.0)).size(), 64u);
  std::vector<int> hits(64, 0);
  const auto rects = partition_regions(64, 64, 8);
  Rng rng(8);
  for (int t = 0; t < 6400; ++t) {
    const auto r = select_noise_region(img, gate(1.0, 1.0), rng);
    ASSERT_TRUE(r);
    ++hits[(r->rect.y / 8) * 8 + r->rect.x / 8];
  }
  for (int h : hits) {
    EXPECT_GT(h, 60);
    EXPECT_LT(h, 140);
  }
}

TEST(Select, SameSeedSameChoice) {
  Rng data(5);
  const GrayImage img = irsynth::testing::random_real_image(64, 64, data);
  Rng a(99), b(99);
  const auto ra = select_noise_region(img, gate(1.0, 1.0), a);
  const auto rb = select_noise_region(img, gate(1.0, 1.0), b);
  ASSERT_TRUE(ra && rb);
  EXPECT_EQ(ra->rect, rb->rect);
}

TEST(NoiseField, ResizedToTargetDims) {
  const GrayImage src(256, 256, 0.2);
  const NoiseField f = make_noise_field(src, Rect{0, 0, 32, 32}, 256, 256, "x");
  EXPECT_EQ(f.image.width(), 256);
  EXPECT_EQ(f.image.height(), 256);
  for (double p : f.image.pixels()) EXPECT_EQ(p, 0.2);
}

TEST(Displace, IdentityAndPassthrough) {
  Rng rng(6);
  const GrayImage in = irsynth::testing::random_real_image(9, 7, rng);
  const GrayImage noise = irsynth::testing::random_real_image(9, 7, rng);
  EXPECT_EQ(displace(in, noise, 0.0), in);
  EXPECT_EQ(displace(in, noise, 1.0), noise);
}

TEST(Displace, ConstantArithmetic) {
  const GrayImage in(5, 5, from_u8(50)), noise(5, 5, from_u8(100));
  const GrayImage out = displace(in, noise, 0.1);
  for (double v : out.pixels()) {
    EXPECT_NEAR(v, 55.0 / 255.0, 1e-15);
    EXPECT_EQ(to_u8(v), 55);
  }
}

TEST(Displace, ConvexBound) {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const GrayImage in = irsynth::testing::random_real_image(6, 6, rng);
    const GrayImage noise = irsynth::testing::random_real_image(6, 6, rng);
    const double a = uniform01(rng);
    const GrayImage out = displace(in, noise, a);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double lo = std::min(in.pixels()[i], noise.pixels()[i]), hi = std::max(in.pixels()[i], noise.pixels()[i]);
      ASSERT_GE(out.pixels()[i], lo - 1e-15);
      ASSERT_LE(out.pixels()[i], hi + 1e-15);
    }
  }
}

TEST(Displace, RejectsBadInput) {
  const GrayImage a(4, 4, 0.0), b(4, 5, 0.0);
  EXPECT_THROW(displace(a, b, 0.5), Error);
  EXPECT_THROW(displace(a, a, 1.5), Error);
  EXPECT_THROW(displace(a, a, -0.1), Error);
}

TEST(Config, Validate) {
  EXPECT_THROW(gate(0.0, 0.1).validate(), Error);
  EXPECT_THROW(gate(0.1, -1.0).validate(), Error);
  EXPECT_THROW(gate(0.1, 0.1, 0).validate(), Error);
  auto cfg = gate(0.1, 0.1);
  cfg.n_sources = 0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_NO_THROW(gate(0.1, 0.1).validate());
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(percentile({7}, 0.9), 7.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2}, 1.0), 2.0);
  EXPECT_THROW(percentile({}, 0.5), Error);
}

TEST(Calibrate, QuantilesOfRegionStats) {
  Rng rng(12);
  std::vector<GrayImage> corpus;
  for (int i = 0; i < 3; ++i) corpus.push_back(irsynth::testing::random_real_image(16, 16, rng));
  const GateThresholds th = calibrate_thresholds(corpus, 4);
  std::vector<double> vars, means;
  for (const auto& img : corpus)
    for (const Rect& r : partition_regions(16, 16, 4)) {
      const auto [m, v] = two_pass_stats(img, r);
      vars.push_back(v);
      means.push_back(m);
    }
  EXPECT_NEAR(th.var_max, percentile(vars, kVarianceGatePercentile), 1e-12);
  EXPECT_NEAR(th.mean_max, percentile(means, kMeanGatePercentile), 1e-12);
}

TEST(Names, RegionStatisticRoundTrip) {
  for (auto s : {RegionStatistic::intensity, RegionStatistic::gradient}) {
    EXPECT_EQ(parse_region_statistic(to_string(s)), s);
  }
  EXPECT_THROW(parse_region_statistic("entropy"), Error);
}
