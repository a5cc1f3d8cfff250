#include <gtest/gtest.h>

#include "helpers.hpp"
#include "terraseg/error.hpp"
#include "terraseg/image.hpp"

using namespace terraseg;

TEST(Grayscale, WhiteIsOne) {
  ImageTensor img(1, 1, 3, {1.0f, 1.0f, 1.0f});
  EXPECT_NEAR(to_grayscale(img).at(0, 0), 1.0f, 1e-6f);
}

TEST(Grayscale, PureRed) {
  ImageTensor img(1, 1, 3, {1.0f, 0.0f, 0.0f});
  EXPECT_NEAR(to_grayscale(img).at(0, 0), 0.299f, 1e-6f);
}

TEST(Grayscale, OneChannelUnchangedAndIdempotent) {
  const auto gray = testutil::random_image(5, 4, 1, 3);
  EXPECT_EQ(to_grayscale(gray), gray);
  const auto rgb = testutil::random_image(5, 4, 3, 4);
  EXPECT_EQ(to_grayscale(to_grayscale(rgb)), to_grayscale(rgb));
}

TEST(Grayscale, RejectsTwoChannels) { EXPECT_THROW(to_grayscale(ImageTensor(2, 2, 2)), InvalidInput); }

TEST(ApplyMask, ZeroMaskIsIdentity) {
  const auto img = testutil::random_image(4, 4, 3, 1);
  EXPECT_EQ(apply_mask(img, BinaryMask(4, 4, 0)), img);
}

TEST(ApplyMask, FullMaskZeroesEverything) {
  const auto out = apply_mask(testutil::random_image(4, 4, 3, 1), BinaryMask(4, 4, 1));
  for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ApplyMask, SinglePixelAllChannels) {
  const auto img = testutil::random_image(2, 2, 3, 9);
  BinaryMask m(2, 2);
  m.at(0, 0) = 1;
  const auto out = apply_mask(img, m);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(out.at(0, 0, c), 0.0f);
    EXPECT_EQ(out.at(0, 1, c), img.at(0, 1, c));
    EXPECT_EQ(out.at(1, 0, c), img.at(1, 0, c));
    EXPECT_EQ(out.at(1, 1, c), img.at(1, 1, c));
  }
}

TEST(ApplyMask, ShapeMismatch) {
  EXPECT_THROW(apply_mask(ImageTensor(4, 4, 3), BinaryMask(4, 5)), InvalidInput);
}

TEST(SparseLabels, ValidateRange) {
  SparseLabelMap ok(2, 2, 3, {0, 2, -1, 1});
  EXPECT_NO_THROW(ok.validate());
  EXPECT_EQ(ok.labeled_count(), 3u);
  SparseLabelMap bad(2, 2, 3, {0, 3, -1, 1});
  EXPECT_THROW(bad.validate(), InvalidInput);
  SparseLabelMap negative(1, 1, 3, {-2});
  EXPECT_THROW(negative.validate(), InvalidInput);
}

TEST(Categories, TerrainTable) {
  const auto t = CategoryTable::terrain();
  ASSERT_EQ(t.size(), 9);
  EXPECT_EQ(t.names.front(), "sky");
  EXPECT_EQ(t.names.back(), "hole");
  EXPECT_EQ(t.id_of("rover"), 6);
  EXPECT_EQ(t.id_of("water"), -1);
}

TEST(UnitRange, RejectsOutOfRange) {
  EXPECT_NO_THROW(validate_unit_range(testutil::random_image(3, 3, 3, 2)));
  ImageTensor img(1, 2, 1, {0.5f, 1.5f});
  EXPECT_THROW(validate_unit_range(img), InvalidInput);
}
