#include "terraseg/nn/refnet.hpp"

#include <cmath>
#include <random>

#include "terraseg/error.hpp"
#include "terraseg/rng.hpp"

namespace terraseg::nn {
namespace {

// Weight indices into params(); each is followed by its bias.
enum : std::size_t {
  kEnc1 = 0,
  kEnc2 = 2,
  kEnc3 = 4,
  kInp1 = 6,
  kInp2 = 8,
  kLbp1 = 10,
  kLbp2 = 12,
  kCls1 = 14,
  kCls2 = 16,
  kDis1 = 18,
  kDis2 = 20,
  kParamCount = 22,
};

template <typename T>
Tensor<T> from_span(std::span<const double> g, int c, int h, int w) {
  if (g.size() != std::size_t(c) * h * w) throw InvalidInput("head gradient has the wrong size");
  Tensor<T> t(c, h, w);
  for (std::size_t i = 0; i < g.size(); ++i) t.data[i] = T(g[i]);
  return t;
}

template <typename T>
void add_into(Tensor<T>& acc, const Tensor<T>& part) {
  if (acc.data.empty()) {
    acc = part;
    return;
  }
  for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += part.data[i];
}

}  // namespace

void RefNetShape::validate() const {
  if (height <= 0 || width <= 0 || height % 4 || width % 4)
    throw InvalidInput("network input size must be a positive multiple of 4");
  if (image_channels <= 0 || categories <= 0 || lbp_bins <= 0) throw InvalidInput("invalid network channel counts");
  if (width1 <= 0 || width2 <= 0 || width3 < 4 || width3 % 4)
    throw InvalidInput("encoder widths must be positive and width3 a multiple of 4");
  if (lbp_patch <= 0 || lbp_patch % 4) throw InvalidInput("LBP patch must be a positive multiple of 4");
}

template <typename T>
RefNet<T>::RefNet(const RefNetShape& shape, std::uint64_t seed) : shape_(shape) {
  shape.validate();
  const int c = shape.image_channels;
  const int w1 = shape.width1, w2 = shape.width2, w3 = shape.width3;
  convs_ = {
      {c, w1, 3, 2, 1},      {w1, w2, 3, 2, 1},      {w2, w3, 3, 1, 1},
      {w3, w3, 1, 1, 0},     {w3 / 4, 4 * c, 1, 1, 0},
      {w3, w3, 1, 1, 0},     {w3, shape.lbp_bins, 1, 1, 0},
      {w3, w3, 1, 1, 0},     {w3, shape.categories, 1, 1, 0},
      {w3, w3 / 2, 1, 1, 0}, {w3 / 2, 1, 1, 1, 0},
  };
  const char* names[] = {"enc1", "enc2", "enc3", "inp1", "inp2", "lbp1", "lbp2", "cls1", "cls2", "dis1", "dis2"};
  const ParamGroup groups[] = {ParamGroup::Encoder,    ParamGroup::Encoder,       ParamGroup::Encoder,
                               ParamGroup::Inpaint,    ParamGroup::Inpaint,       ParamGroup::Lbp,
                               ParamGroup::Lbp,        ParamGroup::Classifier,    ParamGroup::Classifier,
                               ParamGroup::Discriminator, ParamGroup::Discriminator};
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    const ConvShape& cs = convs_[l];
    Param<T> w{std::string(names[l]) + ".weight", groups[l], {cs.out_channels, cs.in_channels, cs.kernel, cs.kernel}, {}};
    Param<T> b{std::string(names[l]) + ".bias", groups[l], {cs.out_channels}, std::vector<T>(std::size_t(cs.out_channels))};
    std::mt19937_64 rng(derive_seed(seed, {0x726566ULL, l}));
    // He-uniform for the ReLU encoder, Glorot-uniform for the heads
    const double taps = double(cs.kernel) * cs.kernel;
    const double bound = groups[l] == ParamGroup::Encoder ? std::sqrt(6.0 / (cs.in_channels * taps))
                                                          : std::sqrt(6.0 / ((cs.in_channels + cs.out_channels) * taps));
    std::uniform_real_distribution<double> dist(-bound, bound);
    w.value.resize(cs.weight_count());
    for (auto& v : w.value) v = T(dist(rng));
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
}

template <typename T>
std::size_t RefNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
Gradients RefNet<T>::zero_gradients() const {
  Gradients g;
  for (const auto& p : params_) g.emplace_back(p.value.size(), 0.0);
  return g;
}

template <typename T>
ConvShape RefNet<T>::conv_shape(std::size_t weight_index) const {
  return convs_[weight_index / 2];
}

template <typename T>
ForwardState<T> RefNet<T>::forward(const Tensor<T>& x, unsigned heads) const {
  if (x.channels != shape_.image_channels || x.height != shape_.height || x.width != shape_.width)
    throw InvalidInput("network input has shape " + std::to_string(x.channels) + "x" + std::to_string(x.height) +
                       "x" + std::to_string(x.width) + ", expected " + std::to_string(shape_.image_channels) + "x" +
                       std::to_string(shape_.height) + "x" + std::to_string(shape_.width));
  auto conv = [&](const Tensor<T>& in, std::size_t idx, Tensor<T>& out) {
    conv2d_forward<T>(in, params_[idx].value, params_[idx + 1].value, conv_shape(idx), out);
  };
  ForwardState<T> s;
  s.heads = heads;
  s.input = x;
  for (auto& v : s.input.data) v -= T(0.5);
  conv(s.input, kEnc1, s.enc1);
  relu_forward(s.enc1);
  conv(s.enc1, kEnc2, s.enc2);
  relu_forward(s.enc2);
  conv(s.enc2, kEnc3, s.features);
  relu_forward(s.features);

  if (heads & kInpaint) {
    conv(s.features, kInp1, s.inp_hidden);
    tanh_forward(s.inp_hidden);
    s.inp_upsampled = depth_to_space(s.inp_hidden, 2);
    Tensor<T> pre;
    conv(s.inp_upsampled, kInp2, pre);
    s.image = depth_to_space(pre, 2);
  }
  if (heads & kLbp) {
    conv(s.features, kLbp1, s.lbp_hidden);
    tanh_forward(s.lbp_hidden);
    s.lbp_pooled = block_mean(s.lbp_hidden, shape_.lbp_patch / 4);
    conv(s.lbp_pooled, kLbp2, s.histogram);
  }
  if (heads & kClassifier) {
    conv(s.features, kCls1, s.cls_hidden);
    tanh_forward(s.cls_hidden);
    conv(s.cls_hidden, kCls2, s.cls_coarse);
    s.logits = resize_bilinear(s.cls_coarse, shape_.height, shape_.width);
  }
  if (heads & kDiscriminator) {
    conv(s.features, kDis1, s.dis_hidden);
    tanh_forward(s.dis_hidden);
    Tensor<T> coarse;
    conv(s.dis_hidden, kDis2, coarse);
    s.certainty = resize_bilinear(coarse, shape_.height, shape_.width);
    for (auto& v : s.certainty.data) v = T(1) / (T(1) + std::exp(-v));
  }
  return s;
}

template <typename T>
void RefNet<T>::backward(const ForwardState<T>& s, const HeadGradients& hg, Gradients& grads,
                         bool discriminator_to_encoder) const {
  if (grads.size() != params_.size()) throw InvalidInput("gradient buffer does not match the network");
  auto conv_back = [&](const Tensor<T>& in, std::size_t idx, const Tensor<T>& dout, Tensor<T>* din) {
    conv2d_backward<T>(in, params_[idx].value, conv_shape(idx), dout, din, grads[idx], grads[idx + 1]);
  };
  const int fh = shape_.feature_height();
  const int fw = shape_.feature_width();
  Tensor<T> dfeatures;

  if (!hg.image.empty()) {
    if (!(s.heads & kInpaint)) throw InvalidInput("inpainting head was not evaluated");
    Tensor<T> dimage = from_span<T>(hg.image, shape_.image_channels, shape_.height, shape_.width);
    Tensor<T> dpre = space_to_depth(dimage, 2);
    Tensor<T> dup;
    conv_back(s.inp_upsampled, kInp2, dpre, &dup);
    Tensor<T> dhidden = space_to_depth(dup, 2);
    tanh_backward(s.inp_hidden, dhidden);
    Tensor<T> part;
    conv_back(s.features, kInp1, dhidden, &part);
    add_into(dfeatures, part);
  }
  if (!hg.histogram.empty()) {
    if (!(s.heads & kLbp)) throw InvalidInput("LBP head was not evaluated");
    Tensor<T> dhist = from_span<T>(hg.histogram, shape_.lbp_bins, shape_.lbp_grid_height(), shape_.lbp_grid_width());
    Tensor<T> dpooled;
    conv_back(s.lbp_pooled, kLbp2, dhist, &dpooled);
    Tensor<T> dhidden = block_mean_backward(dpooled, shape_.lbp_patch / 4, fh, fw);
    tanh_backward(s.lbp_hidden, dhidden);
    Tensor<T> part;
    conv_back(s.features, kLbp1, dhidden, &part);
    add_into(dfeatures, part);
  }
  if (!hg.logits.empty()) {
    if (!(s.heads & kClassifier)) throw InvalidInput("classifier head was not evaluated");
    Tensor<T> dlogits = from_span<T>(hg.logits, shape_.categories, shape_.height, shape_.width);
    Tensor<T> dcoarse = resize_bilinear_backward(dlogits, fh, fw);
    Tensor<T> dhidden;
    conv_back(s.cls_hidden, kCls2, dcoarse, &dhidden);
    tanh_backward(s.cls_hidden, dhidden);
    Tensor<T> part;
    conv_back(s.features, kCls1, dhidden, &part);
    add_into(dfeatures, part);
  }
  if (!hg.certainty.empty()) {
    if (!(s.heads & kDiscriminator)) throw InvalidInput("discriminator head was not evaluated");
    Tensor<T> dup = from_span<T>(hg.certainty, 1, shape_.height, shape_.width);
    for (std::size_t i = 0; i < dup.data.size(); ++i)
      dup.data[i] *= s.certainty.data[i] * (T(1) - s.certainty.data[i]);
    Tensor<T> dcoarse = resize_bilinear_backward(dup, fh, fw);
    Tensor<T> dhidden;
    conv_back(s.dis_hidden, kDis2, dcoarse, &dhidden);
    tanh_backward(s.dis_hidden, dhidden);
    Tensor<T> part;
    conv_back(s.features, kDis1, dhidden, discriminator_to_encoder ? &part : nullptr);
    if (discriminator_to_encoder) add_into(dfeatures, part);
  }

  if (dfeatures.data.empty()) return;
  relu_backward(s.features, dfeatures);
  Tensor<T> denc2;
  conv_back(s.enc2, kEnc3, dfeatures, &denc2);
  relu_backward(s.enc2, denc2);
  Tensor<T> denc1;
  conv_back(s.enc1, kEnc2, denc2, &denc1);
  relu_backward(s.enc1, denc1);
  conv_back(s.input, kEnc1, denc1, nullptr);
}

template <typename T>
LbpHistogramMap to_histogram_map(const Tensor<T>& head) {
  LbpHistogramMap m;
  m.grid_height = head.height;
  m.grid_width = head.width;
  m.bins = head.channels;
  m.values.resize(head.size());
  for (int gy = 0; gy < head.height; ++gy)
    for (int gx = 0; gx < head.width; ++gx)
      for (int b = 0; b < head.channels; ++b) m.patch(gy, gx)[b] = double(head.at(b, gy, gx));
  return m;
}

std::vector<double> histogram_grad_to_head(const std::vector<double>& grad, int bins, int grid_h, int grid_w) {
  std::vector<double> out(grad.size());
  for (int gy = 0; gy < grid_h; ++gy)
    for (int gx = 0; gx < grid_w; ++gx)
      for (int b = 0; b < bins; ++b)
        out[(std::size_t(b) * grid_h + gy) * grid_w + gx] = grad[(std::size_t(gy) * grid_w + gx) * bins + b];
  return out;
}

template class RefNet<float>;
template class RefNet<double>;
template LbpHistogramMap to_histogram_map<float>(const Tensor<float>&);
template LbpHistogramMap to_histogram_map<double>(const Tensor<double>&);

}  // namespace terraseg::nn
