#include "terraseg/nn/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "terraseg/error.hpp"

namespace terraseg::nn {
namespace {

template <typename T>
void check_conv(const Tensor<T>& in, std::size_t weights, std::size_t biases, const ConvShape& s) {
  if (in.channels != s.in_channels) throw InvalidInput("conv input channel mismatch");
  if (weights != s.weight_count() || biases != std::size_t(s.out_channels))
    throw InvalidInput("conv parameter size mismatch");
}

inline bool pointwise(const ConvShape& s) { return s.kernel == 1 && s.stride == 1 && s.pad == 0; }

// Row (ic, ky, kx) holds the input value each output pixel sees through that tap; zero outside.
template <typename T>
std::vector<T> im2col(const Tensor<T>& in, const ConvShape& s, int oh, int ow) {
  const int k = s.kernel;
  const std::size_t plane = std::size_t(oh) * ow;
  std::vector<T> cols(std::size_t(s.in_channels) * k * k * plane, T(0));
  for (int ic = 0; ic < s.in_channels; ++ic)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols.data() + ((std::size_t(ic) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride + ky - s.pad;
          if (iy < 0 || iy >= in.height) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride + kx - s.pad;
            if (ix >= 0 && ix < in.width) row[std::size_t(oy) * ow + ox] = in.at(ic, iy, ix);
          }
        }
      }
  return cols;
}

// Scatter-add of im2col rows back onto the input grid, one input channel per thread.
template <typename T>
Tensor<T> col2im(const std::vector<T>& cols, const ConvShape& s, int channels, int height, int width, int oh,
                 int ow) {
  const int k = s.kernel;
  const std::size_t plane = std::size_t(oh) * ow;
  Tensor<T> out(channels, height, width);
#pragma omp parallel for schedule(static)
  for (int ic = 0; ic < channels; ++ic)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols.data() + ((std::size_t(ic) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride + ky - s.pad;
          if (iy < 0 || iy >= height) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride + kx - s.pad;
            if (ix >= 0 && ix < width) out.at(ic, iy, ix) += row[std::size_t(oy) * ow + ox];
          }
        }
      }
  return out;
}

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias, const ConvShape& s,
                    Tensor<T>& out) {
  check_conv(in, weight.size(), bias.size(), s);
  const int oh = s.out_size(in.height);
  const int ow = s.out_size(in.width);
  const std::size_t plane = std::size_t(oh) * ow;
  const std::size_t taps = std::size_t(s.in_channels) * s.kernel * s.kernel;
  const std::vector<T> owned = pointwise(s) ? std::vector<T>() : im2col(in, s, oh, ow);
  const T* cols = pointwise(s) ? in.data.data() : owned.data();
  out = Tensor<T>(s.out_channels, oh, ow);
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    T* dst = out.data.data() + std::size_t(oc) * plane;
    std::fill(dst, dst + plane, bias[oc]);
    for (std::size_t t = 0; t < taps; ++t) {
      const T w = weight[std::size_t(oc) * taps + t];
      const T* src = cols + t * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += w * src[i];
    }
  }
}

template <typename T>
void conv2d_forward_serial(const Tensor<T>& in, std::span<const T> weight, std::span<const T> bias,
                           const ConvShape& s, Tensor<T>& out) {
  check_conv(in, weight.size(), bias.size(), s);
  const int oh = s.out_size(in.height);
  const int ow = s.out_size(in.width);
  out = Tensor<T>(s.out_channels, oh, ow);
  for (int oc = 0; oc < s.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T acc = bias[oc];
        for (int ic = 0; ic < s.in_channels; ++ic)
          for (int ky = 0; ky < s.kernel; ++ky)
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int iy = oy * s.stride + ky - s.pad;
              const int ix = ox * s.stride + kx - s.pad;
              if (iy < 0 || iy >= in.height || ix < 0 || ix >= in.width) continue;
              acc += weight[((std::size_t(oc) * s.in_channels + ic) * s.kernel + ky) * s.kernel + kx] *
                     in.at(ic, iy, ix);
            }
        out.at(oc, oy, ox) = acc;
      }
}

template <typename T>
void conv2d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvShape& s, const Tensor<T>& dout,
                     Tensor<T>* din, std::span<double> dweight, std::span<double> dbias) {
  check_conv(in, weight.size(), dbias.size(), s);
  const int oh = dout.height;
  const int ow = dout.width;
  const std::size_t plane = std::size_t(oh) * ow;
  const std::size_t taps = std::size_t(s.in_channels) * s.kernel * s.kernel;
  const std::vector<T> owned = pointwise(s) ? std::vector<T>() : im2col(in, s, oh, ow);
  const T* cols = pointwise(s) ? in.data.data() : owned.data();
  // pixel-major copy so the per-tap sums run in pixel order and vectorize across taps
  std::vector<T> rows(taps * plane);
  for (std::size_t t = 0; t < taps; ++t)
    for (std::size_t i = 0; i < plane; ++i) rows[i * taps + t] = cols[t * plane + i];
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const T* g = dout.data.data() + std::size_t(oc) * plane;
    double bsum = 0.0;
    std::vector<double> acc(taps, 0.0);
    for (std::size_t i = 0; i < plane; ++i) {
      const double gi = g[i];
      bsum += gi;
      const T* r = rows.data() + i * taps;
      for (std::size_t t = 0; t < taps; ++t) acc[t] += gi * double(r[t]);
    }
    dbias[oc] += bsum;
    for (std::size_t t = 0; t < taps; ++t) dweight[std::size_t(oc) * taps + t] += acc[t];
  }
  if (!din) return;
  std::vector<T> dcols(taps * plane, T(0));
#pragma omp parallel for schedule(static)
  for (long t = 0; t < long(taps); ++t) {
    T* dst = dcols.data() + std::size_t(t) * plane;
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const T w = weight[std::size_t(oc) * taps + std::size_t(t)];
      const T* g = dout.data.data() + std::size_t(oc) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += w * g[i];
    }
  }
  if (pointwise(s)) {
    *din = Tensor<T>(in.channels, in.height, in.width, std::move(dcols));
    return;
  }
  *din = col2im(dcols, s, in.channels, in.height, in.width, oh, ow);
}

template <typename T>
void conv2d_backward_serial(const Tensor<T>& in, std::span<const T> weight, const ConvShape& s,
                            const Tensor<T>& dout, Tensor<T>* din, std::span<double> dweight,
                            std::span<double> dbias) {
  check_conv(in, weight.size(), dbias.size(), s);
  if (din) *din = Tensor<T>(in.channels, in.height, in.width);
  for (int oc = 0; oc < s.out_channels; ++oc)
    for (int oy = 0; oy < dout.height; ++oy)
      for (int ox = 0; ox < dout.width; ++ox) {
        const T g = dout.at(oc, oy, ox);
        dbias[oc] += g;
        for (int ic = 0; ic < s.in_channels; ++ic)
          for (int ky = 0; ky < s.kernel; ++ky)
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int iy = oy * s.stride + ky - s.pad;
              const int ix = ox * s.stride + kx - s.pad;
              if (iy < 0 || iy >= in.height || ix < 0 || ix >= in.width) continue;
              const std::size_t wi = ((std::size_t(oc) * s.in_channels + ic) * s.kernel + ky) * s.kernel + kx;
              dweight[wi] += double(g) * in.at(ic, iy, ix);
              if (din) din->at(ic, iy, ix) += weight[wi] * g;
            }
      }
}

template <typename T>
void tanh_forward(Tensor<T>& x) {
  for (auto& v : x.data) v = std::tanh(v);
}

template <typename T>
void tanh_backward(const Tensor<T>& y, Tensor<T>& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= T(1) - y.data[i] * y.data[i];
}

template <typename T>
void relu_forward(Tensor<T>& x) {
  for (auto& v : x.data) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& y, Tensor<T>& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (!(y.data[i] > T(0))) grad.data[i] = T(0);
}

namespace {

struct Tap1d {
  int i0;
  int i1;
  double t;
};

std::vector<Tap1d> resize_taps(int in, int out) {
  std::vector<Tap1d> taps(static_cast<std::size_t>(out));
  const double scale = double(in) / double(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, double(in - 1));
    const int i0 = int(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& in, int out_h, int out_w) {
  Tensor<T> out(in.channels, out_h, out_w);
  const auto ty = resize_taps(in.height, out_h);
  const auto tx = resize_taps(in.width, out_w);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < out_h; ++y) {
      const auto& a = ty[y];
      for (int x = 0; x < out_w; ++x) {
        const auto& b = tx[x];
        const T top = in.at(c, a.i0, b.i0) * T(1 - b.t) + in.at(c, a.i0, b.i1) * T(b.t);
        const T bottom = in.at(c, a.i1, b.i0) * T(1 - b.t) + in.at(c, a.i1, b.i1) * T(b.t);
        out.at(c, y, x) = top * T(1 - a.t) + bottom * T(a.t);
      }
    }
  return out;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dout, int in_h, int in_w) {
  Tensor<T> din(dout.channels, in_h, in_w);
  const auto ty = resize_taps(in_h, dout.height);
  const auto tx = resize_taps(in_w, dout.width);
  for (int c = 0; c < dout.channels; ++c)
    for (int y = 0; y < dout.height; ++y) {
      const auto& a = ty[y];
      for (int x = 0; x < dout.width; ++x) {
        const auto& b = tx[x];
        const T g = dout.at(c, y, x);
        const T gt = g * T(1 - a.t);
        const T gb = g * T(a.t);
        din.at(c, a.i0, b.i0) += gt * T(1 - b.t);
        din.at(c, a.i0, b.i1) += gt * T(b.t);
        din.at(c, a.i1, b.i0) += gb * T(1 - b.t);
        din.at(c, a.i1, b.i1) += gb * T(b.t);
      }
    }
  return din;
}

template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& in, int r) {
  if (in.channels % (r * r) != 0) throw InvalidInput("depth_to_space: channels not divisible by r*r");
  Tensor<T> out(in.channels / (r * r), in.height * r, in.width * r);
  for (int c = 0; c < out.channels; ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int y = 0; y < in.height; ++y)
          for (int x = 0; x < in.width; ++x) out.at(c, y * r + i, x * r + j) = in.at((c * r + i) * r + j, y, x);
  return out;
}

template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& in, int r) {
  Tensor<T> out(in.channels * r * r, in.height / r, in.width / r);
  for (int c = 0; c < in.channels; ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int y = 0; y < out.height; ++y)
          for (int x = 0; x < out.width; ++x) out.at((c * r + i) * r + j, y, x) = in.at(c, y * r + i, x * r + j);
  return out;
}

template <typename T>
Tensor<T> block_mean(const Tensor<T>& in, int cell) {
  const int gh = (in.height + cell - 1) / cell;
  const int gw = (in.width + cell - 1) / cell;
  Tensor<T> out(in.channels, gh, gw);
  for (int c = 0; c < in.channels; ++c)
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        const int y1 = std::min(in.height, (gy + 1) * cell);
        const int x1 = std::min(in.width, (gx + 1) * cell);
        T sum = 0;
        for (int y = gy * cell; y < y1; ++y)
          for (int x = gx * cell; x < x1; ++x) sum += in.at(c, y, x);
        out.at(c, gy, gx) = sum / T((y1 - gy * cell) * (x1 - gx * cell));
      }
  return out;
}

template <typename T>
Tensor<T> block_mean_backward(const Tensor<T>& dout, int cell, int in_h, int in_w) {
  Tensor<T> din(dout.channels, in_h, in_w);
  for (int c = 0; c < dout.channels; ++c)
    for (int gy = 0; gy < dout.height; ++gy)
      for (int gx = 0; gx < dout.width; ++gx) {
        const int y1 = std::min(in_h, (gy + 1) * cell);
        const int x1 = std::min(in_w, (gx + 1) * cell);
        const T g = dout.at(c, gy, gx) / T((y1 - gy * cell) * (x1 - gx * cell));
        for (int y = gy * cell; y < y1; ++y)
          for (int x = gx * cell; x < x1; ++x) din.at(c, y, x) = g;
      }
  return din;
}

#define TERRASEG_INSTANTIATE(T)                                                                                   \
  template void conv2d_forward<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, const ConvShape&,    \
                                  Tensor<T>&);                                                                    \
  template void conv2d_forward_serial<T>(const Tensor<T>&, std::span<const T>, std::span<const T>,               \
                                         const ConvShape&, Tensor<T>&);                                           \
  template void conv2d_backward<T>(const Tensor<T>&, std::span<const T>, const ConvShape&, const Tensor<T>&,     \
                                   Tensor<T>*, std::span<double>, std::span<double>);                             \
  template void conv2d_backward_serial<T>(const Tensor<T>&, std::span<const T>, const ConvShape&,                \
                                          const Tensor<T>&, Tensor<T>*, std::span<double>, std::span<double>);    \
  template void tanh_forward<T>(Tensor<T>&);                                                                      \
  template void tanh_backward<T>(const Tensor<T>&, Tensor<T>&);                                                   \
  template void relu_forward<T>(Tensor<T>&);                                                                      \
  template void relu_backward<T>(const Tensor<T>&, Tensor<T>&);                                                   \
  template Tensor<T> resize_bilinear<T>(const Tensor<T>&, int, int);                                              \
  template Tensor<T> resize_bilinear_backward<T>(const Tensor<T>&, int, int);                                     \
  template Tensor<T> depth_to_space<T>(const Tensor<T>&, int);                                                    \
  template Tensor<T> space_to_depth<T>(const Tensor<T>&, int);                                                    \
  template Tensor<T> block_mean<T>(const Tensor<T>&, int);                                                        \
  template Tensor<T> block_mean_backward<T>(const Tensor<T>&, int, int, int);

TERRASEG_INSTANTIATE(float)
TERRASEG_INSTANTIATE(double)

}  // namespace terraseg::nn
