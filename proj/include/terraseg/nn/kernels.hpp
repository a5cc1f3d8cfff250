#pragma once

#include <span>

#include "terraseg/tensor.hpp"

namespace terraseg::nn {

struct ConvShape {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  int out_size(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_count() const { return std::size_t(out_channels) * in_channels * kernel * kernel; }
};

// Weights are [out][in][ky][kx]. The OpenMP kernels split work over output
// channels (forward, weight gradient) or im2col taps (input gradient), so
// every element is produced by one thread in a fixed order and results do
// not depend on the thread count. The *_serial variants are direct
// per-element reference implementations used by the tests and benchmark.
template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias, const ConvShape& s,
                    Tensor<T>& out);
template <typename T>
void conv2d_forward_serial(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias,
                           const ConvShape& s, Tensor<T>& out);

// Accumulates into dweight/dbias (double); overwrites `din` when non-null.
template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvShape& s, const Tensor<T>& dout,
                     Tensor<T>* din, std::span<double> dweight, std::span<double> dbias);
template <typename T>
void conv2d_backward_serial(const Tensor<T>& in, std::span<const T> weight, const ConvShape& s,
                            const Tensor<T>& dout, Tensor<T>* din, std::span<double> dweight,
                            std::span<double> dbias);

template <typename T>
void tanh_forward(Tensor<T>& x);
// grad *= 1 - y^2 where y is the activation output
template <typename T>
void tanh_backward(const Tensor<T>& y, Tensor<T>& grad);

template <typename T>
void relu_forward(Tensor<T>& x);
// zeroes grad wherever the activation output is not positive
template <typename T>
void relu_backward(const Tensor<T>& y, Tensor<T>& grad);

// Half-pixel-centered bilinear resize with edge clamping.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& in, int out_h, int out_w);
template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dout, int in_h, int in_w);

// (C*r*r, H, W) -> (C, r*H, r*W)
template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& in, int r);
template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& in, int r);

// Mean over `cell` x `cell` blocks; trailing blocks may be partial.
template <typename T>
Tensor<T> block_mean(const Tensor<T>& in, int cell);
template <typename T>
Tensor<T> block_mean_backward(const Tensor<T>& dout, int cell, int in_h, int in_w);

}  // namespace terraseg::nn
