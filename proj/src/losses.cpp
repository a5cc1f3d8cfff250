#include "terraseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace terraseg {
namespace {

// sum of a*x + b*y, with empty vectors treated as zeros
std::vector<double> axpby(double a, const std::vector<double>& x, double b, const std::vector<double>& y) {
  const std::size_t n = std::max(x.size(), y.size());
  if (!x.empty() && !y.empty() && x.size() != y.size())
    throw InvalidInput("cannot combine gradients of different shapes");
  std::vector<double> out(n, 0.0);
  if (!x.empty())
    for (std::size_t i = 0; i < n; ++i) out[i] += a * x[i];
  if (!y.empty())
    for (std::size_t i = 0; i < n; ++i) out[i] += b * y[i];
  return out;
}

std::vector<double> scaled(double a, const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

LossValue cross_entropy_impl(const Tensor<double>& logits, const SparseLabelMap& labels, bool empty_is_zero) {
  if (logits.height != labels.height() || logits.width != labels.width())
    throw InvalidInput("logits and labels differ in spatial shape");
  if (logits.channels != labels.num_categories())
    throw InvalidInput("logit channel count does not match the category count");
  labels.validate();
  const std::size_t plane = logits.plane();
  const int classes = logits.channels;
  LossValue out;
  out.grad.assign(logits.size(), 0.0);
  const std::size_t n = labels.labeled_count();
  if (n == 0) {
    if (empty_is_zero) return out;
    throw EmptyRegion("cross-entropy over a map without labeled pixels");
  }
  const double inv_n = 1.0 / double(n);
  double total = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const int label = labels[i];
    if (label == kUnlabeled) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes; ++c) top = std::max(top, logits.data[c * plane + i]);
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += std::exp(logits.data[c * plane + i] - top);
    const double log_z = top + std::log(sum);
    total += log_z - logits.data[label * plane + i];
    for (int c = 0; c < classes; ++c) {
      const double prob = std::exp(logits.data[c * plane + i] - log_z);
      out.grad[c * plane + i] = (prob - (c == label ? 1.0 : 0.0)) * inv_n;
    }
  }
  out.value = total * inv_n;
  return out;
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {inp, lbp, ce, pseudo})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("loss weights must be finite and nonnegative");
}

LossValue loss_inp(const Tensor<double>& pred, const Tensor<double>& target, const BinaryMask& mask) {
  if (!pred.same_shape(target)) throw InvalidInput("prediction and target differ in shape");
  if (pred.height != mask.height() || pred.width != mask.width())
    throw InvalidInput("mask shape does not match prediction");
  const std::size_t masked = mask.masked_count();
  if (masked == 0) throw EmptyRegion("reconstruction loss over an empty mask");
  const std::size_t plane = pred.plane();
  const double inv = 1.0 / (double(masked) * pred.channels);
  LossValue out;
  out.grad.assign(pred.size(), 0.0);
  double total = 0.0;
  for (int c = 0; c < pred.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask[i]) continue;
      const std::size_t k = c * plane + i;
      const double diff = pred.data[k] - target.data[k];
      total += diff * diff;
      out.grad[k] = 2.0 * diff * inv;
    }
  out.value = total * inv;
  return out;
}

LossValue loss_lbp(const LbpHistogramMap& pred, const LbpHistogramMap& target, const PatchMask& pmask) {
  if (pred.grid_height != target.grid_height || pred.grid_width != target.grid_width || pred.bins != target.bins)
    throw InvalidInput("histogram maps differ in shape");
  if (pred.grid_height != pmask.grid_height || pred.grid_width != pmask.grid_width)
    throw InvalidInput("patch mask does not match histogram grid");
  const std::size_t masked = pmask.masked_count();
  if (masked == 0) throw EmptyRegion("histogram loss over an empty patch mask");
  const double inv = 1.0 / (double(masked) * pred.bins);
  LossValue out;
  out.grad.assign(pred.values.size(), 0.0);
  double total = 0.0;
  for (std::size_t p = 0; p < pmask.bits.size(); ++p) {
    if (!pmask.bits[p]) continue;
    for (int b = 0; b < pred.bins; ++b) {
      const std::size_t k = p * pred.bins + b;
      const double diff = pred.values[k] - target.values[k];
      total += diff * diff;
      out.grad[k] = 2.0 * diff * inv;
    }
  }
  out.value = total * inv;
  return out;
}

PretrainLoss loss_pretrain(const LossValue& inp, const LossValue& lbp, const LossWeights& w) {
  w.validate();
  return {w.inp * inp.value + w.lbp * lbp.value, scaled(w.inp, inp.grad), scaled(w.lbp, lbp.grad)};
}

LossValue masked_cross_entropy(const Tensor<double>& logits, const SparseLabelMap& labels) {
  return cross_entropy_impl(logits, labels, false);
}

LossValue dice_loss(std::span<const double> p, std::span<const std::uint8_t> q) {
  if (p.size() != q.size()) throw InvalidInput("dice inputs differ in size");
  double sum_pq = 0.0;
  double sum_p = 0.0;
  double sum_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum_pq += p[i] * q[i];
    sum_p += p[i];
    sum_q += q[i];
  }
  const double num = 2.0 * sum_pq + kDiceEpsilon;
  const double den = sum_p + sum_q + kDiceEpsilon;
  LossValue out;
  out.value = 1.0 - num / den;
  out.grad.resize(p.size());
  const double inv_den2 = 1.0 / (den * den);
  for (std::size_t i = 0; i < p.size(); ++i) out.grad[i] = -(2.0 * q[i] * den - num) * inv_den2;
  return out;
}

LossValue loss_pseudo(const Tensor<double>& logits, const SparseLabelMap& merged) {
  return cross_entropy_impl(logits, merged, true);
}

LossValue loss_supervised(const LossValue& ce, const LossWeights& w) {
  w.validate();
  return {w.ce * ce.value, scaled(w.ce, ce.grad)};
}

LossValue loss_semi(const LossValue& ce, const LossValue& pseudo, const LossWeights& w) {
  w.validate();
  return {w.ce * ce.value + w.pseudo * pseudo.value, axpby(w.ce, ce.grad, w.pseudo, pseudo.grad)};
}

}  // namespace terraseg
