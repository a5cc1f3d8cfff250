#include <gtest/gtest.h>

#include <fstream>

#include "helpers.hpp"
#include "terraseg/error.hpp"
#include "terraseg/losses.hpp"
#include "terraseg/nn/refnet.hpp"
#include "terraseg/pseudo_label.hpp"
#include "terraseg/trainer.hpp"

using namespace terraseg;
using namespace terraseg::nn;

namespace {

RefNetShape tiny() {
  RefNetShape s;
  s.height = 16;
  s.width = 16;
  s.categories = 3;
  s.lbp_bins = 6;
  s.lbp_patch = 8;
  s.width1 = 3;
  s.width2 = 4;
  s.width3 = 8;
  return s;
}

struct Composite {
  Tensor<double> x;
  Tensor<double> target;
  BinaryMask mask;
  LbpHistogramMap hist_target;
  PatchMask pmask;
  SparseLabelMap labels;
  SparseLabelMap merged;
  LossWeights w{0.5, 0.5, 1.0, 0.7};
};

Composite make_composite(const RefNetShape& s, std::uint64_t seed) {
  Composite c;
  c.target = testutil::random_tensor(3, s.height, s.width, seed, 0.0, 1.0);
  c.x = c.target;
  std::mt19937_64 rng(seed);
  c.mask = BinaryMask(s.height, s.width);
  for (std::size_t i = 0; i < c.mask.size(); ++i) c.mask.at(int(i) / s.width, int(i) % s.width) = rng() % 2;
  c.mask.at(0, 0) = 1;
  for (int ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < c.mask.size(); ++i)
      if (c.mask[i]) c.x.data[ch * c.mask.size() + i] = 0.0;
  const int gh = s.lbp_grid_height(), gw = s.lbp_grid_width();
  c.hist_target = {gh, gw, s.lbp_bins, testutil::random_tensor(1, 1, gh * gw * s.lbp_bins, seed + 1, 0.0, 0.5).data};
  c.pmask = {gh, gw, std::vector<std::uint8_t>(std::size_t(gh) * gw, 0)};
  c.pmask.bits[0] = c.pmask.bits[3] = 1;
  c.labels = testutil::random_labels(s.height, s.width, s.categories, 0.6, seed + 2);
  c.labels.at(0, 0) = 1;
  c.merged = c.labels;
  const auto extra = testutil::random_labels(s.height, s.width, s.categories, 0.5, seed + 3);
  for (std::size_t i = 0; i < c.merged.size(); ++i)
    if (c.merged[i] == kUnlabeled) c.merged[i] = extra[i];
  return c;
}

struct CompositeLoss {
  double value = 0.0;
  std::vector<double> image, histogram, logits, certainty;
};

CompositeLoss pretrain_loss(const ForwardState<double>& st, const Composite& c, const RefNetShape& s) {
  const auto total = loss_pretrain(loss_inp(st.image, c.target, c.mask),
                                   loss_lbp(to_histogram_map(st.histogram), c.hist_target, c.pmask), c.w);
  CompositeLoss out;
  out.value = total.value;
  out.image = total.grad_image;
  out.histogram = histogram_grad_to_head(total.grad_hist, s.lbp_bins, s.lbp_grid_height(), s.lbp_grid_width());
  return out;
}

CompositeLoss semi_loss(const ForwardState<double>& st, const Composite& c) {
  const auto semi = loss_semi(masked_cross_entropy(st.logits, c.labels), loss_pseudo(st.logits, c.merged), c.w);
  const auto q = labeledness_target(c.labels);
  const auto dice = dice_loss(st.certainty.data, q.bits());
  CompositeLoss out;
  out.value = semi.value + dice.value;
  out.logits = semi.grad;
  out.certainty = dice.grad;
  return out;
}

template <typename LossFn>
double worst_param_error(const RefNet<double>& net, const Composite& c, unsigned heads, LossFn loss, bool d2e,
                         const Gradients* analytic_override = nullptr) {
  const auto st = net.forward(c.x, heads);
  const auto l = loss(st);
  auto g = net.zero_gradients();
  net.backward(st, {l.image, l.histogram, l.logits, l.certainty}, g, d2e);
  if (analytic_override) g = *analytic_override;
  double worst = 0.0;
  const double h = 1e-6;
  RefNet<double> probe = net;
  for (std::size_t p = 0; p < net.params().size(); ++p)
    for (std::size_t j = 0; j < net.params()[p].value.size(); ++j) {
      auto& v = probe.params()[p].value[j];
      const double keep = v;
      v = keep + h;
      const double up = loss(probe.forward(c.x, heads)).value;
      v = keep - h;
      const double down = loss(probe.forward(c.x, heads)).value;
      v = keep;
      worst = std::max(worst, testutil::rel_err(g[p][j], (up - down) / (2 * h)));
    }
  return worst;
}

}  // namespace

TEST(RefNet, OutputShapes) {
  RefNetShape s;
  s.lbp_patch = 32;
  RefNet<float> net(s, 1);
  const auto x = to_planar(testutil::random_image(64, 64, 3, 2));
  const auto st = net.forward(x, kInpaint | kLbp | kClassifier | kDiscriminator);
  EXPECT_EQ(st.image.channels, 3);
  EXPECT_EQ(st.image.height, 64);
  EXPECT_EQ(st.histogram.channels, s.lbp_bins);
  EXPECT_EQ(st.histogram.height, 2);
  EXPECT_EQ(st.histogram.width, 2);
  EXPECT_EQ(st.logits.channels, 4);
  EXPECT_EQ(st.logits.height, 64);
  EXPECT_EQ(st.logits.width, 64);
  ASSERT_EQ(st.certainty.size(), 64u * 64u);
  for (float p : st.certainty.data) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
  const auto only = net.forward(x, kClassifier);
  EXPECT_TRUE(only.image.data.empty());
  EXPECT_EQ(only.logits, st.logits);
}

TEST(RefNet, RejectsWrongInput) {
  RefNet<float> net(RefNetShape{}, 1);
  EXPECT_THROW(net.forward(Tensor<float>(3, 32, 32), kClassifier), InvalidInput);
  EXPECT_THROW(net.forward(Tensor<float>(1, 64, 64), kClassifier), InvalidInput);
}

TEST(RefNet, InitDeterministic) {
  RefNet<float> a(tiny(), 9), b(tiny(), 9), c(tiny(), 10);
  for (std::size_t p = 0; p < a.params().size(); ++p) EXPECT_EQ(a.params()[p].value, b.params()[p].value);
  bool differs = false;
  for (std::size_t p = 0; p < a.params().size(); ++p) differs |= a.params()[p].value != c.params()[p].value;
  EXPECT_TRUE(differs);
}

TEST(RefNet, ZeroLossZeroGradientAndLinearity) {
  const auto s = tiny();
  RefNet<double> net(s, 3);
  const auto c = make_composite(s, 1);
  const unsigned heads = kClassifier | kDiscriminator;
  const auto st = net.forward(c.x, heads);
  const std::vector<double> zl(st.logits.size(), 0.0), zc(st.certainty.size(), 0.0);
  auto g = net.zero_gradients();
  net.backward(st, {{}, {}, zl, zc}, g, true);
  for (const auto& p : g)
    for (double v : p) EXPECT_EQ(v, 0.0);

  const auto l = semi_loss(st, c);
  std::vector<double> l3 = l.logits, c3 = l.certainty;
  for (auto& v : l3) v *= 3.0;
  for (auto& v : c3) v *= 3.0;
  auto g1 = net.zero_gradients(), g3 = net.zero_gradients();
  net.backward(st, {{}, {}, l.logits, l.certainty}, g1, true);
  net.backward(st, {{}, {}, l3, c3}, g3, true);
  for (std::size_t p = 0; p < g1.size(); ++p)
    for (std::size_t j = 0; j < g1[p].size(); ++j) EXPECT_NEAR(g3[p][j], 3.0 * g1[p][j], 1e-12);
}

TEST(RefNet, PretrainGradientMatchesFiniteDifferences) {
  const auto s = tiny();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RefNet<double> net(s, seed);
    const auto c = make_composite(s, seed + 100);
    const auto err = worst_param_error(net, c, kInpaint | kLbp,
                                       [&](const ForwardState<double>& st) { return pretrain_loss(st, c, s); }, false);
    EXPECT_LT(err, 1e-5) << "seed " << seed;
  }
}

TEST(RefNet, SemiGradientMatchesFiniteDifferences) {
  const auto s = tiny();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RefNet<double> net(s, seed + 50);
    const auto c = make_composite(s, seed + 200);
    const auto loss = [&](const ForwardState<double>& st) { return semi_loss(st, c); };
    EXPECT_LT(worst_param_error(net, c, kClassifier | kDiscriminator, loss, true), 1e-5) << "seed " << seed;
  }
}

TEST(RefNet, DiscriminatorStopGradient) {
  const auto s = tiny();
  RefNet<double> net(s, 5);
  const auto c = make_composite(s, 6);
  const auto st = net.forward(c.x, kDiscriminator);
  const auto q = labeledness_target(c.labels);
  const auto dice = dice_loss(st.certainty.data, q.bits());
  auto g = net.zero_gradients();
  net.backward(st, {{}, {}, {}, dice.grad}, g, false);
  double disc = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p)
    for (double v : g[p]) {
      if (net.params()[p].group == ParamGroup::Discriminator) disc += std::abs(v);
      else EXPECT_EQ(v, 0.0);
    }
  EXPECT_GT(disc, 0.0);
}

TEST(RefNet, SinglePrecisionGradient) {
  const auto s = tiny();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RefNet<float> net32(s, seed + 70);
    const RefNet<double> net64 = net32.cast<double>();
    const auto c = make_composite(s, seed + 300);
    const auto st32 = net32.forward(c.x.cast<float>(), kClassifier | kDiscriminator);
    // head gradients from the float forward pass
    ForwardState<double> as64;
    as64.logits = st32.logits.cast<double>();
    as64.certainty = st32.certainty.cast<double>();
    const auto l32 = semi_loss(as64, c);
    auto g32 = net32.zero_gradients();
    net32.backward(st32, {{}, {}, l32.logits, l32.certainty}, g32, true);
    const auto loss = [&](const ForwardState<double>& st) { return semi_loss(st, c); };
    EXPECT_LT(worst_param_error(net64, c, kClassifier | kDiscriminator, loss, true, &g32), 1e-3);
  }
}

TEST(Checkpoint, RoundTrip) {
  testutil::TempDir dir;
  Net net(tiny(), 12);
  save_checkpoint(dir / "a.ckpt", net);
  const Net back = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(back.shape(), net.shape());
  for (std::size_t p = 0; p < net.params().size(); ++p) {
    EXPECT_EQ(back.params()[p].name, net.params()[p].name);
    EXPECT_EQ(back.params()[p].value, net.params()[p].value);
  }
}

TEST(Checkpoint, CorruptFilesRejected) {
  testutil::TempDir dir;
  save_checkpoint(dir / "a.ckpt", Net(tiny(), 1));
  std::ifstream in(dir / "a.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  std::ofstream(dir / "long.ckpt", std::ios::binary) << bytes << 'x';
  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream(dir / "magic.ckpt", std::ios::binary) << bad;
  EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), IoError);
  EXPECT_THROW(load_checkpoint(dir / "long.ckpt"), IoError);
  EXPECT_THROW(load_checkpoint(dir / "magic.ckpt"), IoError);
  EXPECT_THROW(load_checkpoint(dir / "none.ckpt"), IoError);
}
