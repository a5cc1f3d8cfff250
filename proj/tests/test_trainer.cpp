#include <gtest/gtest.h>

#include <numeric>

#include "helpers.hpp"
#include "terraseg/error.hpp"
#include "terraseg/synth.hpp"
#include "terraseg/trainer.hpp"

using namespace terraseg;

namespace {

std::vector<Sample> synth_set(std::size_t n, std::uint64_t seed, int erosion = 2, double dropout = 0.0) {
  SynthTextureSpec spec;
  spec.height = spec.width = 32;
  spec.erosion = erosion;
  spec.dropout = dropout;
  std::vector<Sample> out;
  const auto raw = synth_samples(spec, n, seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back({std::to_string(i), raw[i].image, raw[i].labels});
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.seed = 3;
  c.batch_size = 4;
  c.pretrain_steps = 20;
  c.finetune_steps = 20;
  c.lbp_patch = 16;
  c.width1 = 4;
  c.width2 = 8;
  c.width3 = 16;
  return c;
}

bool same_params(const Net& a, const Net& b) {
  for (std::size_t p = 0; p < a.params().size(); ++p)
    if (a.params()[p].value != b.params()[p].value) return false;
  return true;
}

double mean_loss(const TrainLog& log, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += log.steps[i].loss;
  return s / double(to - from);
}

}  // namespace

TEST(Trainer, PretrainDeterministic) {
  const auto data = synth_set(12, 1);
  const auto c = small_config();
  const auto a = pretrain(c, data);
  const auto b = pretrain(c, data);
  EXPECT_TRUE(same_params(a.net, b.net));
  EXPECT_EQ(a.log.steps_csv(), b.log.steps_csv());
  auto other = c;
  other.seed = 4;
  EXPECT_FALSE(same_params(a.net, pretrain(other, data).net));
}

TEST(Trainer, FinetuneDeterministic) {
  const auto data = synth_set(12, 2);
  auto c = small_config();
  c.finetune_steps = 30;
  c.eval_every = 10;
  const auto init = pretrain(c, data);
  const auto a = finetune(c, data, &init.net, &data);
  const auto b = finetune(c, data, &init.net, &data);
  EXPECT_TRUE(same_params(a.net, b.net));
  EXPECT_EQ(a.log.steps_csv(), b.log.steps_csv());
  EXPECT_EQ(a.log.evals_csv(), b.log.evals_csv());
  EXPECT_EQ(a.log.evals.size(), 3u);
  EXPECT_EQ(metrics_csv(evaluate(a.net, data), {"a", "b", "c", "d"}),
            metrics_csv(evaluate(b.net, data), {"a", "b", "c", "d"}));
}

TEST(Trainer, ZeroPseudoWeightEqualsSupervised) {
  const auto data = synth_set(12, 3, 3, 0.3);
  auto c = small_config();
  c.finetune_steps = 25;
  c.threshold.threshold = 0.3;
  auto no_pseudo = c;
  no_pseudo.weights.pseudo = 0.0;
  auto never = c;
  never.pseudo_start = c.finetune_steps;
  const auto a = finetune(no_pseudo, data, nullptr);
  const auto b = finetune(never, data, nullptr);
  EXPECT_TRUE(same_params(a.net, b.net));
  for (const auto& r : a.log.steps) EXPECT_EQ(r.pseudo, 0.0);

  // with pseudo-labels active the run differs
  auto early = c;
  early.pseudo_start = 5;
  EXPECT_FALSE(same_params(a.net, finetune(early, data, nullptr).net));
}

TEST(Trainer, FullyLabeledDataGetsNoPseudoLabels) {
  const auto data = synth_set(8, 4, 0, 0.0);
  auto c = small_config();
  c.pseudo_start = 0;
  c.threshold.threshold = 0.0;
  const auto r = finetune(c, data, nullptr);
  for (const auto& s : r.log.steps) EXPECT_EQ(s.coverage, 0.0);
  const auto views = pseudo_labels(r.net, data, {0.0});
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(views[i].merged, data[i].labels);
}

TEST(Trainer, UntrainedNetIsNearChance) {
  const auto data = synth_set(40, 5, 0, 0.0);
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto c = small_config();
    c.seed = seed;
    Net net(network_shape(c, data), seed);
    mean += evaluate(net, data).acc / 5.0;
  }
  EXPECT_NEAR(mean, 0.25, 0.1);
}

TEST(Trainer, PretrainLossDecreases) {
  const auto data = synth_set(24, 6);
  auto c = small_config();
  c.pretrain_steps = 300;
  c.lr = 0.03;
  const auto r = pretrain(c, data);
  ASSERT_EQ(r.log.steps.size(), 300u);
  EXPECT_LT(mean_loss(r.log, 200, 300), mean_loss(r.log, 0, 100));
}

TEST(Trainer, InpaintingOnlyIgnoresLbpSettings) {
  const auto data = synth_set(8, 7);
  auto c = small_config();
  c.weights.lbp = 0.0;
  const auto a = pretrain(c, data);
  c.lbp.points = 16;
  c.lbp.radius = 2.0;
  c.lbp_patch = 8;
  const auto b = pretrain(c, data);
  for (std::size_t p = 0; p < a.net.params().size(); ++p) {
    const auto g = a.net.params()[p].group;
    if (g == nn::ParamGroup::Encoder || g == nn::ParamGroup::Inpaint)
      EXPECT_EQ(a.net.params()[p].value, b.net.params()[p].value);
  }
  for (std::size_t i = 0; i < a.log.steps.size(); ++i) EXPECT_EQ(a.log.steps[i].inp, b.log.steps[i].inp);
}

TEST(Trainer, BothPretrainWeightsZeroIsConflict) {
  auto c = small_config();
  c.weights.inp = c.weights.lbp = 0.0;
  EXPECT_THROW(pretrain(c, synth_set(4, 8)), ConfigConflict);
}

TEST(Trainer, HugeLearningRateDiverges) {
  auto c = small_config();
  c.lr = 1e6;
  c.pretrain_steps = 50;
  try {
    pretrain(c, synth_set(8, 9));
    FAIL() << "expected divergence";
  } catch (const Divergence& d) {
    EXPECT_GE(d.step(), 0);
    EXPECT_LT(d.step(), 50);
  }
}

TEST(Trainer, CoverageMonotoneInThreshold) {
  const auto data = synth_set(16, 10, 3, 0.5);
  auto c = small_config();
  c.finetune_steps = 60;
  const auto net = finetune(c, data, nullptr).net;
  double last = 2.0;
  for (double t : {0.3, 0.5, 0.7, 0.9, 0.99, 0.999}) {
    double cov = 0.0;
    for (const auto& v : pseudo_labels(net, data, {t})) cov += v.coverage / double(data.size());
    EXPECT_LE(cov, last);
    last = cov;
  }
}

TEST(Trainer, InitShapeMismatchAndEmptySplit) {
  const auto data = synth_set(4, 11);
  auto c = small_config();
  auto other = c;
  other.width3 = 32;
  const Net wrong(network_shape(other, data), 1);
  EXPECT_THROW(finetune(c, data, &wrong), InvalidInput);
  EXPECT_THROW(evaluate(wrong, {}), InvalidInput);
  EXPECT_THROW(pretrain(c, {}), InvalidInput);
}
