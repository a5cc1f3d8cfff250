#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "terraseg/lbp.hpp"
#include "terraseg/nn/kernels.hpp"
#include "terraseg/tensor.hpp"

namespace terraseg::nn {

// Desk-scale encoder with four heads:
//   encoder f        3x3 convs, widths w1/w2/w3, strides 2/2/1, ReLU
//   inpainting g     1x1 conv + tanh, 2x depth-to-space, 1x1 conv, 2x depth-to-space
//   LBP h            1x1 conv + tanh, mean over each histogram patch, 1x1 conv to bins
//   classifier phi   1x1 conv + tanh, 1x1 conv to C logits, bilinear x4
//   discriminator d  1x1 conv + tanh, 1x1 conv to 1, bilinear x4, sigmoid
struct RefNetShape {
  int height = 64;
  int width = 64;
  int image_channels = 3;
  int categories = 4;
  int lbp_bins = 26;
  int lbp_patch = 32;
  int width1 = 8;
  int width2 = 16;
  int width3 = 32;

  void validate() const;
  int feature_height() const { return height / 4; }
  int feature_width() const { return width / 4; }
  int lbp_grid_height() const { return (height + lbp_patch - 1) / lbp_patch; }
  int lbp_grid_width() const { return (width + lbp_patch - 1) / lbp_patch; }
  bool operator==(const RefNetShape&) const = default;
};

enum Head : unsigned {
  kInpaint = 1u,
  kLbp = 2u,
  kClassifier = 4u,
  kDiscriminator = 8u,
};

enum class ParamGroup { Encoder, Inpaint, Lbp, Classifier, Discriminator };

template <typename T>
struct Param {
  std::string name;
  ParamGroup group;
  std::vector<int> shape;
  std::vector<T> value;
};

// One double buffer per parameter, same order as RefNet::params().
using Gradients = std::vector<std::vector<double>>;

template <typename T>
struct ForwardState {
  unsigned heads = 0;
  Tensor<T> input;  // centred: x - 0.5
  Tensor<T> enc1, enc2, features;  // post-activation
  Tensor<T> inp_hidden, inp_upsampled, image;
  Tensor<T> lbp_hidden, lbp_pooled, histogram;  // histogram: bins x grid_h x grid_w
  Tensor<T> cls_hidden, cls_coarse, logits;
  Tensor<T> dis_hidden, certainty;  // certainty: 1 x H x W, in (0,1)
};

// Loss gradients with respect to each head output (double, same layout as
// the ForwardState tensor). Empty spans mean "no gradient from this head".
struct HeadGradients {
  std::span<const double> image;
  std::span<const double> histogram;
  std::span<const double> logits;
  std::span<const double> certainty;
};

template <typename T>
class RefNet {
 public:
  RefNet() = default;
  RefNet(const RefNetShape& shape, std::uint64_t seed);

  const RefNetShape& shape() const { return shape_; }
  std::vector<Param<T>>& params() { return params_; }
  const std::vector<Param<T>>& params() const { return params_; }
  std::size_t parameter_count() const;

  Gradients zero_gradients() const;

  ForwardState<T> forward(const Tensor<T>& x, unsigned heads) const;

  // Accumulates into `grads`. The discriminator gradient stops at its head
  // unless `discriminator_to_encoder` is set.
  void backward(const ForwardState<T>& state, const HeadGradients& head_grads, Gradients& grads,
                bool discriminator_to_encoder = false) const;

  // Copies every parameter of `group` from `other` (shapes must agree).
  template <typename U>
  void copy_group(const RefNet<U>& other, ParamGroup group);

  template <typename U>
  RefNet<U> cast() const;

 private:
  ConvShape conv_shape(std::size_t weight_index) const;

  RefNetShape shape_;
  std::vector<Param<T>> params_;
  std::vector<ConvShape> convs_;  // one per weight/bias pair
};

// [bins][gy][gx] head output <-> [gy][gx][bin] histogram map
template <typename T>
LbpHistogramMap to_histogram_map(const Tensor<T>& head);
std::vector<double> histogram_grad_to_head(const std::vector<double>& grad, int bins, int grid_h, int grid_w);

template <typename T>
template <typename U>
void RefNet<T>::copy_group(const RefNet<U>& other, ParamGroup group) {
  const auto& src = other.params();
  if (src.size() != params_.size()) throw InvalidInput("network layouts differ");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].group != group) continue;
    if (src[i].shape != params_[i].shape) throw InvalidInput("parameter '" + params_[i].name + "' differs in shape");
    params_[i].value.assign(src[i].value.begin(), src[i].value.end());
  }
}

template <typename T>
template <typename U>
RefNet<U> RefNet<T>::cast() const {
  RefNet<U> out(shape_, 0);
  for (auto g : {ParamGroup::Encoder, ParamGroup::Inpaint, ParamGroup::Lbp, ParamGroup::Classifier,
                 ParamGroup::Discriminator})
    out.copy_group(*this, g);
  return out;
}

}  // namespace terraseg::nn
