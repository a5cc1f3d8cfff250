#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "terraseg/error.hpp"
#include "terraseg/pseudo_label.hpp"

using namespace terraseg;

namespace {

SparseLabelMap row(std::vector<int> v, int c = 4) {
  const int w = int(v.size());
  return SparseLabelMap(1, w, c, std::move(v));
}

CertaintyMap certainty(std::vector<double> v) { return {1, int(v.size()), std::move(v)}; }

CertaintyMap random_certainty(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CertaintyMap p{h, w, std::vector<double>(std::size_t(h) * w)};
  for (auto& v : p.values) v = u(rng);
  return p;
}

std::vector<int> values(const SparseLabelMap& m) { return {m.labels().begin(), m.labels().end()}; }

}  // namespace

TEST(Labeledness, Examples) {
  const auto q = labeledness_target(row({3, -1}));
  EXPECT_EQ(q[0], 1);
  EXPECT_EQ(q[1], 0);
  EXPECT_EQ(labeledness_target(SparseLabelMap(3, 3, 4, 2)).masked_count(), 9u);
  EXPECT_EQ(labeledness_target(SparseLabelMap(3, 3, 4)).masked_count(), 0u);
}

TEST(SelectConfident, Examples) {
  EXPECT_EQ(values(select_confident(row({1, 2, 2}), certainty({0.95, 0.95, 0.5}), {0.9})),
            (std::vector<int>{1, 2, -1}));
  EXPECT_EQ(values(select_confident(row({1, 2}), certainty({0.9, 0.9000001}), {0.9})), (std::vector<int>{-1, 2}));
  EXPECT_EQ(values(select_confident(row({1, 2}), certainty({0.999, 0.9989}), {0.999})),
            (std::vector<int>{-1, -1}));
  EXPECT_EQ(values(select_confident(row({1, 2}), certainty({0.0, 0.001}), {0.0})), (std::vector<int>{-1, 2}));
  EXPECT_THROW(select_confident(row({1, 2}), certainty({0.5}), {0.9}), InvalidInput);
}

TEST(ThresholdPolicy, Range) {
  EXPECT_NO_THROW(ThresholdPolicy{0.0}.validate());
  EXPECT_NO_THROW(ThresholdPolicy{0.999}.validate());
  EXPECT_THROW(ThresholdPolicy{1.0}.validate(), InvalidInput);
  EXPECT_THROW(ThresholdPolicy{-0.1}.validate(), InvalidInput);
}

TEST(MergeLabels, Examples) {
  EXPECT_EQ(values(merge_labels(row({1, 2, -1}), row({0, -1, -1}))), (std::vector<int>{0, 2, -1}));
  const auto y = row({0, -1, 3, -1});
  EXPECT_EQ(values(merge_labels(row({-1, -1, -1, -1}), y)), values(y));
  const auto full = row({0, 1, 2, 3});
  EXPECT_EQ(values(merge_labels(row({3, 2, 1, 0}), full)), values(full));
}

TEST(Coverage, Examples) {
  const auto y = row({0, -1, -1, -1, -1});
  EXPECT_EQ(pseudo_coverage(y, y), 0.0);
  EXPECT_EQ(pseudo_coverage(row({0, 1, 1, 2, 3}), y), 1.0);
  EXPECT_EQ(pseudo_coverage(row({0, 1, -1, 2, -1}), y), 0.5);
  EXPECT_EQ(pseudo_coverage(row({0, 1}), row({0, 1})), 0.0);
}

TEST(PseudoLaws, GroundTruthNeverOverwritten) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto y = testutil::random_labels(8, 8, 4, 0.6, seed);
    const auto pred = testutil::random_labels(8, 8, 4, 0.0, seed + 5000);
    const auto p = random_certainty(8, 8, seed);
    const auto merged = merge_labels(select_confident(pred, p, {0.5}), y);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] != kUnlabeled) ASSERT_EQ(merged[i], y[i]);
  }
}

TEST(PseudoLaws, CoverageMonotoneInThreshold) {
  const double ts[] = {0.3, 0.5, 0.7, 0.9, 0.99, 0.999};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto y = testutil::random_labels(16, 16, 4, 0.7, seed);
    const auto pred = testutil::random_labels(16, 16, 4, 0.0, seed + 1);
    auto p = random_certainty(16, 16, seed + 2);
    for (auto& v : p.values) v = 1.0 - v * v * v * v;
    double last = 1.0;
    for (double t : ts) {
      const double cov = pseudo_coverage(merge_labels(select_confident(pred, p, {t}), y), y);
      EXPECT_LE(cov, last);
      last = cov;
    }
  }
}

TEST(PseudoLaws, SelectionIdempotent) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto pred = testutil::random_labels(8, 8, 4, 0.0, seed);
    const auto p = random_certainty(8, 8, seed + 9);
    const auto once = select_confident(pred, p, {0.7});
    EXPECT_EQ(values(select_confident(once, p, {0.7})), values(once));
  }
}

TEST(PseudoLaws, PerfectDiscriminatorAddsNothing) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto y = testutil::random_labels(8, 8, 4, 0.5, seed);
    const auto q = labeledness_target(y);
    CertaintyMap p{8, 8, std::vector<double>(q.bits().begin(), q.bits().end())};
    const auto pred = testutil::random_labels(8, 8, 4, 0.0, seed + 3);
    for (double t : {0.1, 0.5, 0.9, 0.999}) {
      const auto merged = merge_labels(select_confident(pred, p, {t}), y);
      EXPECT_EQ(values(merged), values(y));
    }
  }
}

TEST(Argmax, LowestIndexWinsTies) {
  Tensor<double> logits(3, 1, 3);
  logits.at(1, 0, 0) = 2.0;
  logits.at(2, 0, 1) = 1.0;
  logits.at(0, 0, 1) = 1.0;
  EXPECT_EQ(values(argmax_labels(logits)), (std::vector<int>{1, 0, 0}));
}
