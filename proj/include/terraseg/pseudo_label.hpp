#pragma once

#include <vector>

#include "terraseg/image.hpp"
#include "terraseg/tensor.hpp"

namespace terraseg {

// Per-pixel probability that a pixel is "labelable" (low task uncertainty).
struct CertaintyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

// Pixels with certainty strictly above `threshold` keep their prediction.
// A threshold of 0 accepts every pixel (ungated pseudo-labeling).
struct ThresholdPolicy {
  double threshold = 0.9;

  void validate() const;  // 0 <= t < 1
};

// 1 where the ground truth is labeled.
BinaryMask labeledness_target(const SparseLabelMap& labels);

SparseLabelMap select_confident(const SparseLabelMap& predicted, const CertaintyMap& certainty,
                                const ThresholdPolicy& policy);

// Ground truth wins; otherwise the confident prediction; otherwise unlabeled.
SparseLabelMap merge_labels(const SparseLabelMap& selected, const SparseLabelMap& ground_truth);

// Fraction of originally unlabeled pixels that carry a label after merging.
// Returns 0 when the ground truth has no unlabeled pixel.
double pseudo_coverage(const SparseLabelMap& merged, const SparseLabelMap& ground_truth);

// Per-pixel argmax over the channel axis (lowest index wins ties).
template <typename T>
SparseLabelMap argmax_labels(const Tensor<T>& logits) {
  SparseLabelMap out(logits.height, logits.width, logits.channels, 0);
  const std::size_t plane = logits.plane();
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    T best_value = logits.data[i];
    for (int c = 1; c < logits.channels; ++c)
      if (logits.data[c * plane + i] > best_value) {
        best_value = logits.data[c * plane + i];
        best = c;
      }
    out[i] = best;
  }
  return out;
}

}  // namespace terraseg
