#include <gtest/gtest.h>

#include <fstream>

#include "irsynth/image.hpp"
#include "irsynth/image_io.hpp"
#include "test_support.hpp"

using namespace irsynth;
using irsynth::testing::TempDir;

namespace {

GrayImage codes(int w, int h, std::vector<std::uint8_t> c) { return image_from_u8(w, h, c); }

void write_pgm(const std::filesystem::path& p, int w, int h, const std::vector<std::uint8_t>& c) {
  std::ofstream out(p, std::ios::binary);
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size()));
}

}  // namespace

TEST(Raster, RejectsOutOfRangeAndBadLength) {
  EXPECT_THROW(GrayImage(2, 1, std::vector<double>{0.0, 1.5}), Error);
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>{0.0}), Error);
  EXPECT_THROW(Mask(1, 1, std::vector<std::uint8_t>{2}), Error);
}

TEST(ImageIo, TwoByTwoRoundTrip) {
  TempDir tmp;
  const GrayImage img = codes(2, 2, {0, 255, 128, 64});
  for (const char* ext : {".png", ".pgm"}) {
    const auto p = tmp / (std::string("a") + ext);
    save_image(img, p);
    const GrayImage back = load_image(p);
    EXPECT_EQ(back, img) << ext;
    EXPECT_EQ(image_to_u8(back), (std::vector<std::uint8_t>{0, 255, 128, 64}));
  }
}

TEST(ImageIo, SaveLoadBitExactRandom) {
  TempDir tmp;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const int w = 1 + static_cast<int>(uniform_index(rng, 40)), h = 1 + static_cast<int>(uniform_index(rng, 40));
    const GrayImage img = irsynth::testing::random_image(w, h, rng);
    const Mask m = irsynth::testing::random_mask(w, h, rng, 0.3);
    save_image(img, tmp / "i.png");
    save_mask(m, tmp / "m.png");
    EXPECT_EQ(load_image(tmp / "i.png"), img);
    EXPECT_EQ(load_mask(tmp / "m.png"), m);
  }
}

TEST(ImageIo, MaskValueRules) {
  TempDir tmp;
  write_pgm(tmp / "bin.pgm", 2, 1, {0, 255});
  EXPECT_EQ(load_mask(tmp / "bin.pgm"), Mask(2, 1, std::vector<std::uint8_t>{0, 1}));

  write_pgm(tmp / "zero.pgm", 3, 1, {0, 0, 0});
  EXPECT_EQ(load_mask(tmp / "zero.pgm"), Mask(3, 1, std::uint8_t{0}));

  write_pgm(tmp / "tri.pgm", 3, 1, {0, 128, 255});
  try {
    load_mask(tmp / "tri.pgm");
    FAIL() << "ambiguous mask accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
  }
  write_pgm(tmp / "nozero.pgm", 2, 1, {7, 255});
  EXPECT_THROW(load_mask(tmp / "nozero.pgm"), Error);
}

TEST(ImageIo, MissingFileIsIoError) {
  try {
    load_image("/nonexistent/file.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(ImageIo, GarbageIsFormatError) {
  TempDir tmp;
  std::ofstream(tmp / "bad.png") << "definitely not a png";
  try {
    load_image(tmp / "bad.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
  }
}

TEST(ImageIo, ListByStemRejectsDuplicates) {
  TempDir tmp;
  save_image(codes(1, 1, {0}), tmp / "a.png");
  save_image(codes(1, 1, {0}), tmp / "b.pgm");
  std::ofstream(tmp / "notes.txt") << "ignored";
  const auto listing = list_rasters_by_stem(tmp.path());
  ASSERT_EQ(listing.size(), 2u);
  EXPECT_EQ(listing.begin()->first, "a");
  save_image(codes(1, 1, {0}), tmp / "a.pgm");
  EXPECT_THROW(list_rasters_by_stem(tmp.path()), Error);
}

TEST(Quantise, RoundsHalfAwayAndSaturates) {
  EXPECT_EQ(to_u8(0.0), 0);
  EXPECT_EQ(to_u8(1.0), 255);
  EXPECT_EQ(to_u8(0.5 / 255.0), 1);
  EXPECT_EQ(to_u8(55.0 / 255.0), 55);
  for (int c = 0; c < 256; ++c) EXPECT_EQ(to_u8(from_u8(static_cast<std::uint8_t>(c))), c);
}

TEST(Crop, FullFrameAndTopLeft) {
  Rng rng(1);
  const GrayImage img = irsynth::testing::random_image(4, 4, rng);
  EXPECT_EQ(crop(img, img.bounds()), img);
  const GrayImage tl = crop(img, Rect{0, 0, 2, 2});
  ASSERT_EQ(tl.width(), 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) EXPECT_EQ(tl.at(x, y), img.at(x, y));
  const GrayImage big(256, 256, 0.25);
  const GrayImage cell = crop(big, Rect{0, 0, 32, 32});
  EXPECT_EQ(cell.width(), 32);
  EXPECT_EQ(cell.height(), 32);
}

TEST(Crop, RectOutsideIsRejected) {
  const GrayImage img(4, 4, 0.0);
  EXPECT_THROW(crop(img, Rect{3, 3, 2, 2}), Error);
  EXPECT_THROW(crop(img, Rect{0, 0, 0, 1}), Error);
  EXPECT_THROW(paste(img, GrayImage(2, 2, 0.0), Rect{-1, 0, 2, 2}), Error);
}

TEST(Paste, InverseOfCropForEveryRect) {
  Rng rng(9);
  const GrayImage img = irsynth::testing::random_image(5, 4, rng);
  int n = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x)
      for (int h = 1; y + h <= 4; ++h)
        for (int w = 1; x + w <= 5; ++w, ++n) {
          const Rect r{x, y, w, h};
          ASSERT_EQ(paste(img, crop(img, r), r), img) << to_string(r);
        }
  EXPECT_EQ(n, 150);
}

TEST(Paste, ZeroPatchTouchesExactlyItsRect) {
  const GrayImage img(8, 8, 0.5);
  for (const Rect r : {Rect{2, 3, 3, 3}, Rect{0, 0, 3, 3}}) {
    const GrayImage out = paste(img, GrayImage(3, 3, 0.0), r);
    int changed = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        if (out.at(x, y) != img.at(x, y)) {
          ++changed;
          EXPECT_TRUE(r.contains(x, y));
        }
      }
    EXPECT_EQ(changed, 9);
  }
}

TEST(Resize, ConstantsAndIdentity) {
  const GrayImage c(3, 5, from_u8(37));
  const GrayImage up = resize_bilinear(c, 17, 11);
  for (double v : up.pixels()) EXPECT_EQ(v, from_u8(37));
  Rng rng(4);
  const GrayImage img = irsynth::testing::random_real_image(7, 6, rng);
  EXPECT_EQ(resize_bilinear(img, 7, 6), img);
}

TEST(Resize, TwoToFourMatchesFormula) {
  const GrayImage row = codes(2, 1, {0, 255});
  const GrayImage out = resize_bilinear(row, 4, 1);
  // half-pixel centres: src = (x + 0.5) * 2 / 4 - 0.5, clamped to [0, 1]
  const double expect[] = {0.0, 0.25, 0.75, 1.0};
  for (int x = 0; x < 4; ++x) {
    EXPECT_DOUBLE_EQ(out.at(x, 0), expect[x]) << x;
    if (x > 0) {
      EXPECT_GE(out.at(x, 0), out.at(x - 1, 0));
    }
  }
}

TEST(Resize, MatchesDirectBilinearEvaluation) {
  Rng rng(5);
  const GrayImage img = irsynth::testing::random_real_image(5, 3, rng);
  const int ow = 13, oh = 7;
  const GrayImage out = resize_bilinear(img, ow, oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double sx = std::clamp((x + 0.5) * 5 / ow - 0.5, 0.0, 4.0);
      const double sy = std::clamp((y + 0.5) * 3 / oh - 0.5, 0.0, 2.0);
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, 4), y1 = std::min(y0 + 1, 2);
      const double fx = sx - x0, fy = sy - y0;
      const double want = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                          fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
      EXPECT_NEAR(out.at(x, y), want, 1e-12);
    }
}

TEST(Rotate, PermutationAndGroupLaw) {
  const GrayImage p = codes(2, 2, {1, 2, 3, 4});  // [a b; c d]
  EXPECT_EQ(image_to_u8(rotate90(p, 1)), (std::vector<std::uint8_t>{2, 4, 1, 3}));
  EXPECT_EQ(rotate90(p, 0), p);
  Rng rng(6);
  for (int s = 1; s <= 7; s += 2) {
    const GrayImage q = irsynth::testing::random_image(s, s, rng);
    GrayImage r = q;
    for (int k = 0; k < 4; ++k) r = rotate90(r, 1);
    EXPECT_EQ(r, q);
    EXPECT_EQ(rotate90(rotate90(q, 1), 2), rotate90(q, 3));
    EXPECT_THROW(rotate90(q, 4), Error);
  }
  EXPECT_THROW(rotate90(GrayImage(2, 3, 0.0), 1), Error);
}

TEST(Binarize, Threshold) {
  const GrayImage g(3, 1, std::vector<double>{0.2, 0.5, 0.9});
  EXPECT_EQ(binarize(g), Mask(3, 1, std::vector<std::uint8_t>{0, 1, 1}));
  EXPECT_EQ(foreground_count(binarize(g, 0.6)), 1);
}
