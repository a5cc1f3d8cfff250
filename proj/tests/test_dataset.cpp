#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "helpers.hpp"
#include "terraseg/dataset.hpp"
#include "terraseg/error.hpp"
#include "terraseg/png_io.hpp"

using namespace terraseg;

namespace {

std::vector<std::pair<std::string, std::string>> samples(int n) {
  std::vector<std::pair<std::string, std::string>> out;
  for (int i = 0; i < n; ++i) out.emplace_back("img/" + std::to_string(i) + ".png", "lab/" + std::to_string(i) + ".png");
  return out;
}

CategoryTable table() { return CategoryTable{{"soil", "bedrock", "sand"}}; }

}  // namespace

TEST(Split, DisjointCover) {
  const auto m = split(samples(10), 3, {8, 1, 1}, table());
  EXPECT_EQ(m.of(Split::Train).size(), 8u);
  EXPECT_EQ(m.of(Split::Val).size(), 1u);
  EXPECT_EQ(m.of(Split::Test).size(), 1u);
  std::set<std::string> seen;
  for (const auto& e : m.entries) EXPECT_TRUE(seen.insert(e.image_path).second);
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_NO_THROW(m.validate());
}

TEST(Split, Deterministic) {
  EXPECT_EQ(split(samples(50), 7, {30, 10, 10}, table()), split(samples(50), 7, {30, 10, 10}, table()));
  EXPECT_NE(split(samples(50), 7, {30, 10, 10}, table()).entries,
            split(samples(50), 8, {30, 10, 10}, table()).entries);
}

TEST(Split, PaperProportions) {
  const auto c = default_split_counts(6000);
  EXPECT_EQ(c.train, 5000u);
  EXPECT_EQ(c.val, 200u);
  EXPECT_EQ(c.test, 800u);
  EXPECT_EQ(default_split_counts(557).total(), 557u);
}

TEST(Split, InsufficientSamples) {
  EXPECT_THROW(split(samples(5), 1, {4, 1, 1}, table()), InvalidInput);
}

TEST(Manifest, PathInTwoSplitsRejected) {
  DatasetManifest m;
  m.entries = {{"a.png", "a_l.png", Split::Train}, {"a.png", "a_l.png", Split::Test}};
  EXPECT_THROW(m.validate(), InvalidInput);
}

TEST(Manifest, RoundTrip) {
  const auto m = split(samples(20), 11, {10, 5, 5}, table());
  EXPECT_EQ(manifest_from_text(manifest_to_text(m)), m);
  testutil::TempDir dir;
  write_manifest(dir / "manifest.csv", m);
  EXPECT_EQ(read_manifest(dir / "manifest.csv"), m);
  EXPECT_THROW(read_manifest(dir / "missing.csv"), IoError);
}

TEST(Stats, Examples) {
  SparseLabelMap two(2, 2, 3, {0, 2, -1, 0});
  SparseLabelMap none(2, 2, 3);
  const auto s = stats({two, none}, 3);
  ASSERT_GE(s.images_by_category_count.size(), 3u);
  EXPECT_EQ(s.images_by_category_count[2], 1u);
  EXPECT_EQ(s.images_by_category_count[0], 1u);
  EXPECT_EQ(s.images_by_category_count[1], 0u);
  EXPECT_EQ(s.labeled_pixels, 3u);
  EXPECT_EQ(s.total_pixels, 8u);
  EXPECT_DOUBLE_EQ(s.unlabeled_fraction(), 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(s.category_share[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.category_share[2], 1.0 / 3.0);
  double total = 0.0;
  for (double v : s.category_share) total += v;
  EXPECT_NEAR(total, 1.0, 1e-15);
  const auto csv = stats_csv(s, table());
  EXPECT_NE(csv.find("bedrock"), std::string::npos);
}

TEST(Stats, FromManifestOnDisk) {
  testutil::TempDir dir;
  std::filesystem::create_directories(dir / "lab");
  std::filesystem::create_directories(dir / "img");
  DatasetManifest m;
  m.categories = table();
  write_labels(dir / "lab/0.png", SparseLabelMap(2, 2, 3, {0, 2, -1, 0}));
  write_image(dir / "img/0.png", testutil::random_image(2, 2, 3, 1));
  m.entries = {{"img/0.png", "lab/0.png", Split::Train}};
  const auto s = stats(m, dir.path());
  EXPECT_EQ(s.labeled_pixels, 3u);

  m.entries.push_back({"img/1.png", "lab/1.png", Split::Test});
  try {
    stats(m, dir.path());
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("1.png"), std::string::npos);
  }
}

TEST(LoadSamples, ReadsOnlyRequestedSplit) {
  testutil::TempDir dir;
  std::filesystem::create_directories(dir / "lab");
  std::filesystem::create_directories(dir / "img");
  DatasetManifest m;
  m.categories = table();
  for (int i = 0; i < 3; ++i) {
    const std::string n = std::to_string(i) + ".png";
    write_labels(dir / ("lab/" + n), SparseLabelMap(4, 4, 3, i));
    write_image(dir / ("img/" + n), testutil::random_image(4, 4, 3, i));
    m.entries.push_back({"img/" + n, "lab/" + n, i == 2 ? Split::Val : Split::Train});
  }
  const auto train = load_samples(m, Split::Train, dir.path());
  ASSERT_EQ(train.size(), 2u);
  EXPECT_EQ(train[1].labels.at(0, 0), 1);
  EXPECT_EQ(load_samples(m, Split::Val, dir.path()).size(), 1u);
}
