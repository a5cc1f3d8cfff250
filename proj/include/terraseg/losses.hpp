#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "terraseg/image.hpp"
#include "terraseg/lbp.hpp"
#include "terraseg/masking.hpp"
#include "terraseg/tensor.hpp"

namespace terraseg {

// A scalar loss and its gradient with respect to the differentiated input,
// laid out like that input. Accumulation is done in double.
struct LossValue {
  double value = 0.0;
  std::vector<double> grad;
};

struct LossWeights {
  double inp = 0.5;
  double lbp = 0.5;
  double ce = 1.0;
  double pseudo = 1.0;

  void validate() const;
};

// Masked-region reconstruction MSE, normalized by (#masked pixels * channels).
// Throws EmptyRegion if the mask has no set pixel.
LossValue loss_inp(const Tensor<double>& pred, const Tensor<double>& target, const BinaryMask& mask);

// MSE over the histogram bins of masked patches, normalized by (#masked * bins).
LossValue loss_lbp(const LbpHistogramMap& pred, const LbpHistogramMap& target, const PatchMask& pmask);

// Weighted pre-training objective. The two components differentiate
// different inputs, so both gradients are kept.
struct PretrainLoss {
  double value = 0.0;
  std::vector<double> grad_image;
  std::vector<double> grad_hist;
};
PretrainLoss loss_pretrain(const LossValue& inp, const LossValue& lbp, const LossWeights& w);

// Mean over labeled pixels of -log softmax(logits)[label]; logits are C x H x W.
// Throws EmptyRegion when no pixel is labeled.
LossValue masked_cross_entropy(const Tensor<double>& logits, const SparseLabelMap& labels);

// 1 - (2 sum(pq) + eps) / (sum(p) + sum(q) + eps); gradient with respect to p.
inline constexpr double kDiceEpsilon = 1e-6;
LossValue dice_loss(std::span<const double> p, std::span<const std::uint8_t> q);

// Cross-entropy against merged pseudo labels. An empty merged set yields
// zero loss and zero gradient.
LossValue loss_pseudo(const Tensor<double>& logits, const SparseLabelMap& merged);

LossValue loss_supervised(const LossValue& ce, const LossWeights& w);

// Both components must differentiate the same logits.
LossValue loss_semi(const LossValue& ce, const LossValue& pseudo, const LossWeights& w);

}  // namespace terraseg
