#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "terraseg/image.hpp"

namespace terraseg {

// counts(i, j) = labeled pixels with ground truth i predicted as j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_categories = 0)
      : n_(num_categories), counts_(std::size_t(num_categories) * num_categories, 0) {}

  int num_categories() const { return n_; }
  std::uint64_t at(int truth, int predicted) const { return counts_[std::size_t(truth) * n_ + predicted]; }
  std::uint64_t& at(int truth, int predicted) { return counts_[std::size_t(truth) * n_ + predicted]; }

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t truth_count(int category) const;
  std::uint64_t predicted_count(int category) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int n_;
  std::vector<std::uint64_t> counts_;
};

// Counts pixels whose ground truth is labeled. Predictions at labeled
// pixels must be valid categories.
ConfusionMatrix confusion(const SparseLabelMap& predicted, const SparseLabelMap& ground_truth, int num_categories);

struct LabelPair {
  const SparseLabelMap* predicted;
  const SparseLabelMap* ground_truth;
};

// Per-sample matrices merged in sample order; OpenMP across samples.
ConfusionMatrix confusion_batch(std::span<const LabelPair> pairs, int num_categories);
ConfusionMatrix confusion_batch_serial(std::span<const LabelPair> pairs, int num_categories);

// All four throw UndefinedMetric on an empty matrix. Categories without
// ground-truth pixels are left out of the MACC and mIoU means.
double acc(const ConfusionMatrix& cm);
double macc(const ConfusionMatrix& cm);
double miou(const ConfusionMatrix& cm);
double fwiou(const ConfusionMatrix& cm);

struct CategoryScore {
  std::uint64_t pixels = 0;  // ground-truth pixels
  double recall = 0.0;
  double iou = 0.0;
  bool present = false;
};

struct MetricsReport {
  std::vector<CategoryScore> categories;
  std::uint64_t total = 0;
  double acc = 0.0;
  double macc = 0.0;
  double miou = 0.0;
  double fwiou = 0.0;
};

MetricsReport summarize(const ConfusionMatrix& cm);

// Header `category,pixels,recall,iou`; one row per category, then ACC and
// MACC rows (value in the recall column) and mIoU and FWIoU rows (value in
// the iou column).
std::string metrics_csv(const MetricsReport& report, const std::vector<std::string>& names);

}  // namespace terraseg
