#include "terraseg/pseudo_label.hpp"

namespace terraseg {
namespace {

void check_same_shape(const SparseLabelMap& a, const SparseLabelMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) throw InvalidInput("label maps differ in shape");
}

}  // namespace

void ThresholdPolicy::validate() const {
  if (!(threshold >= 0.0 && threshold < 1.0)) throw InvalidInput("certainty threshold must be in [0, 1)");
}

BinaryMask labeledness_target(const SparseLabelMap& labels) {
  BinaryMask q(labels.height(), labels.width());
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x) q.at(y, x) = labels.at(y, x) != kUnlabeled;
  return q;
}

SparseLabelMap select_confident(const SparseLabelMap& predicted, const CertaintyMap& certainty,
                                const ThresholdPolicy& policy) {
  policy.validate();
  if (predicted.height() != certainty.height || predicted.width() != certainty.width ||
      certainty.values.size() != predicted.size())
    throw InvalidInput("certainty map does not match prediction shape");
  SparseLabelMap out(predicted.height(), predicted.width(), predicted.num_categories());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (certainty.values[i] > policy.threshold) out[i] = predicted[i];
  return out;
}

SparseLabelMap merge_labels(const SparseLabelMap& selected, const SparseLabelMap& ground_truth) {
  check_same_shape(selected, ground_truth);
  SparseLabelMap out = ground_truth;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] == kUnlabeled) out[i] = selected[i];
  return out;
}

double pseudo_coverage(const SparseLabelMap& merged, const SparseLabelMap& ground_truth) {
  check_same_shape(merged, ground_truth);
  std::size_t unlabeled = 0;
  std::size_t filled = 0;
  for (std::size_t i = 0; i < merged.size(); ++i)
    if (ground_truth[i] == kUnlabeled) {
      ++unlabeled;
      filled += merged[i] != kUnlabeled;
    }
  return unlabeled == 0 ? 0.0 : double(filled) / double(unlabeled);
}

}  // namespace terraseg
