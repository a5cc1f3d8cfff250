#pragma once

#include <cstddef>
#include <vector>

namespace terraseg {

// Planar (CHW) dense tensor used by the network and the losses.
template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T{}) : channels(c), height(h), width(w), data(std::size_t(c) * h * w, fill) {}
  Tensor(int c, int h, int w, std::vector<T> values) : channels(c), height(h), width(w), data(std::move(values)) {}

  std::size_t plane() const { return std::size_t(height) * width; }
  std::size_t size() const { return data.size(); }
  T& at(int c, int y, int x) { return data[(std::size_t(c) * height + y) * width + x]; }
  T at(int c, int y, int x) const { return data[(std::size_t(c) * height + y) * width + x]; }
  bool same_shape(const Tensor& o) const { return channels == o.channels && height == o.height && width == o.width; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.channels = channels;
    out.height = height;
    out.width = width;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace terraseg
