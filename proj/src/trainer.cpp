#include "terraseg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "terraseg/losses.hpp"
#include "terraseg/pseudo_label.hpp"
#include "terraseg/rng.hpp"

namespace terraseg {
namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;
constexpr std::uint64_t kBatchTag = 0x62617463;
constexpr std::uint64_t kMaskTag = 0x6d61736b;
constexpr std::uint64_t kPretrainTag = 1;
constexpr std::uint64_t kFinetuneTag = 2;

class Sgd {
 public:
  explicit Sgd(const Net& net) {
    for (const auto& p : net.params()) velocity_.emplace_back(p.value.size(), 0.0);
  }

  void step(Net& net, const nn::Gradients& grads, double lr, double momentum) {
    auto& params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].value.size(); ++j) {
        double& v = velocity_[i][j];
        v = momentum * v + grads[i][j];
        params[i].value[j] = float(double(params[i].value[j]) - lr * v);
      }
  }

 private:
  std::vector<std::vector<double>> velocity_;
};

std::vector<std::size_t> draw_batch(std::uint64_t seed, std::uint64_t phase, long step, int batch, std::size_t n) {
  std::mt19937_64 rng(derive_seed(seed, {kBatchTag, phase, std::uint64_t(step)}));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
  for (auto& i : idx) i = pick(rng);
  return idx;
}

// Mean of per-sample gradients, reduced in sample order.
nn::Gradients reduce_mean(const std::vector<nn::Gradients>& per_sample) {
  nn::Gradients total = per_sample.front();
  for (std::size_t b = 1; b < per_sample.size(); ++b)
    for (std::size_t i = 0; i < total.size(); ++i)
      for (std::size_t j = 0; j < total[i].size(); ++j) total[i][j] += per_sample[b][i][j];
  const double inv = 1.0 / double(per_sample.size());
  for (auto& g : total)
    for (auto& v : g) v *= inv;
  return total;
}

void check_finite(const StepRecord& r) {
  if (!std::isfinite(r.loss))
    throw Divergence("non-finite " + r.phase + " loss at step " + std::to_string(r.step), r.step);
}

void check_samples(const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidInput("no samples to train on");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string TrainLog::steps_csv() const {
  std::string out = "step,phase,loss,inp,lbp,ce,pseudo,dice,coverage\n";
  for (const auto& r : steps)
    out += std::to_string(r.step) + "," + r.phase + "," + fmt(r.loss) + "," + fmt(r.inp) + "," + fmt(r.lbp) + "," +
           fmt(r.ce) + "," + fmt(r.pseudo) + "," + fmt(r.dice) + "," + fmt(r.coverage) + "\n";
  return out;
}

std::string TrainLog::evals_csv() const {
  std::string out = "step,acc,miou\n";
  for (const auto& e : evals) out += std::to_string(e.step) + "," + fmt(e.acc) + "," + fmt(e.miou) + "\n";
  return out;
}

Tensor<float> to_planar(const ImageTensor& img) {
  Tensor<float> t(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) t.at(c, y, x) = img.at(y, x, c);
  return t;
}

nn::RefNetShape network_shape(const TrainConfig& config, const std::vector<Sample>& samples) {
  check_samples(samples);
  nn::RefNetShape s;
  s.height = samples.front().image.height();
  s.width = samples.front().image.width();
  s.image_channels = samples.front().image.channels();
  s.categories = samples.front().labels.num_categories();
  s.lbp_bins = config.lbp.bins();
  s.lbp_patch = config.lbp_patch;
  s.width1 = config.width1;
  s.width2 = config.width2;
  s.width3 = config.width3;
  for (const auto& sm : samples)
    if (sm.image.height() != s.height || sm.image.width() != s.width || sm.image.channels() != s.image_channels ||
        sm.labels.num_categories() != s.categories)
      throw InvalidInput("samples differ in size, channels or category count");
  s.validate();
  return s;
}

TrainResult pretrain(const TrainConfig& config, const std::vector<Sample>& samples) {
  config.validate();
  const auto shape = network_shape(config, samples);
  const auto start = std::chrono::steady_clock::now();
  const auto& w = config.weights;
  const unsigned heads = (w.inp > 0.0 ? nn::kInpaint : 0u) | (w.lbp > 0.0 ? nn::kLbp : 0u);
  if (!heads) throw ConfigConflict("lambda-inp and lambda-lbp are both zero; nothing to pre-train");

  std::vector<Tensor<float>> images(samples.size());
  std::vector<LbpHistogramMap> targets(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < long(samples.size()); ++i) {
    images[i] = to_planar(samples[i].image);
    if (heads & nn::kLbp) targets[i] = lbp_target(samples[i].image, config.lbp, config.lbp_patch);
  }

  TrainResult result{Net(shape, derive_seed(config.seed, {kInitTag})), {}};
  Net& net = result.net;
  Sgd opt(net);
  const int batch = config.batch_size;
  for (long step = 0; step < config.pretrain_steps; ++step) {
    const auto idx = draw_batch(config.seed, kPretrainTag, step, batch, samples.size());
    std::vector<nn::Gradients> per(std::size_t(batch), net.zero_gradients());
    std::vector<StepRecord> rec(static_cast<std::size_t>(batch));
#pragma omp parallel for schedule(static)
    for (int b = 0; b < batch; ++b) {
      const Tensor<float>& x = images[idx[b]];
      const BinaryMask mask =
          generate_mask(shape.height, shape.width, config.mask,
                        derive_seed(config.seed, {kMaskTag, std::uint64_t(step), std::uint64_t(b)}));
      Tensor<float> masked = x;
      for (int c = 0; c < x.channels; ++c)
        for (std::size_t i = 0; i < x.plane(); ++i)
          if (mask[i]) masked.data[c * x.plane() + i] = 0.0f;
      const auto state = net.forward(masked, heads);
      LossValue inp, lbp;
      if ((heads & nn::kInpaint) && mask.masked_count() > 0)
        inp = loss_inp(state.image.cast<double>(), x.cast<double>(), mask);
      if (heads & nn::kLbp) {
        const PatchMask pmask = to_patch_mask(mask, config.lbp_patch);
        if (pmask.masked_count() > 0) lbp = loss_lbp(nn::to_histogram_map(state.histogram), targets[idx[b]], pmask);
      }
      const PretrainLoss total = loss_pretrain(inp, lbp, w);
      std::vector<double> hist_grad;
      if (!total.grad_hist.empty())
        hist_grad = nn::histogram_grad_to_head(total.grad_hist, shape.lbp_bins, shape.lbp_grid_height(),
                                               shape.lbp_grid_width());
      nn::HeadGradients hg;
      hg.image = total.grad_image;
      hg.histogram = hist_grad;
      net.backward(state, hg, per[b]);
      rec[b] = {step, "pretrain", total.value, inp.value, lbp.value, 0.0, 0.0, 0.0, 0.0};
    }
    StepRecord mean{step, "pretrain"};
    for (const auto& r : rec) {
      mean.loss += r.loss / batch;
      mean.inp += r.inp / batch;
      mean.lbp += r.lbp / batch;
    }
    check_finite(mean);
    opt.step(net, reduce_mean(per), config.lr, config.momentum);
    result.log.steps.push_back(mean);
  }
  result.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult finetune(const TrainConfig& config, const std::vector<Sample>& samples, const Net* init,
                     const std::vector<Sample>* validation) {
  config.validate();
  const auto shape = network_shape(config, samples);
  const auto start = std::chrono::steady_clock::now();
  std::vector<Tensor<float>> images(samples.size());
  std::vector<BinaryMask> labeledness(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    images[i] = to_planar(samples[i].image);
    labeledness[i] = labeledness_target(samples[i].labels);
  }

  TrainResult result{Net(shape, derive_seed(config.seed, {kInitTag})), {}};
  Net& net = result.net;
  if (init) {
    if (!(init->shape().height == shape.height && init->shape().width == shape.width &&
          init->shape().image_channels == shape.image_channels && init->shape().width1 == shape.width1 &&
          init->shape().width2 == shape.width2 && init->shape().width3 == shape.width3))
      throw InvalidInput("initial weights do not match the network shape");
    net.copy_group(*init, nn::ParamGroup::Encoder);
  }
  Sgd opt(net);
  const int batch = config.batch_size;
  const long pseudo_start = config.effective_pseudo_start();
  const unsigned heads = nn::kClassifier | nn::kDiscriminator;
  for (long step = 0; step < config.finetune_steps; ++step) {
    const bool semi = config.weights.pseudo > 0.0 && step >= pseudo_start;
    const auto idx = draw_batch(config.seed, kFinetuneTag, step, batch, samples.size());
    std::vector<nn::Gradients> per(std::size_t(batch), net.zero_gradients());
    std::vector<StepRecord> rec(static_cast<std::size_t>(batch));
    std::vector<int> overwritten(std::size_t(batch), 0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < batch; ++b) {
      const Sample& sample = samples[idx[b]];
      const auto state = net.forward(images[idx[b]], heads);
      const Tensor<double> logits = state.logits.cast<double>();
      LossValue ce;
      if (sample.labels.labeled_count() > 0) ce = masked_cross_entropy(logits, sample.labels);
      const std::vector<double> certainty(state.certainty.data.begin(), state.certainty.data.end());
      const LossValue dice = dice_loss(certainty, labeledness[idx[b]].bits());
      StepRecord r{step, "finetune"};
      LossValue total;
      if (semi) {
        const SparseLabelMap predicted = argmax_labels(logits);
        const SparseLabelMap selected = select_confident(predicted, {shape.height, shape.width, certainty},
                                                         config.threshold);
        const SparseLabelMap merged = merge_labels(selected, sample.labels);
        for (std::size_t i = 0; i < merged.size(); ++i)
          if (sample.labels[i] != kUnlabeled && merged[i] != sample.labels[i]) overwritten[b] = 1;
        const LossValue pseudo = loss_pseudo(logits, merged);
        total = loss_semi(ce, pseudo, config.weights);
        r.pseudo = pseudo.value;
        r.coverage = pseudo_coverage(merged, sample.labels);
      } else {
        total = loss_supervised(ce, config.weights);
      }
      nn::HeadGradients hg;
      hg.logits = total.grad;
      hg.certainty = dice.grad;
      net.backward(state, hg, per[b], config.disc_to_encoder);
      r.ce = ce.value;
      r.dice = dice.value;
      r.loss = total.value + dice.value;
      rec[b] = r;
    }
    for (int o : overwritten)
      if (o) throw Error("pseudo-label merge overwrote ground truth at step " + std::to_string(step));
    StepRecord mean{step, "finetune"};
    for (const auto& r : rec) {
      mean.loss += r.loss / batch;
      mean.ce += r.ce / batch;
      mean.pseudo += r.pseudo / batch;
      mean.dice += r.dice / batch;
      mean.coverage += r.coverage / batch;
    }
    check_finite(mean);
    opt.step(net, reduce_mean(per), config.lr, config.momentum);
    result.log.steps.push_back(mean);
    if (validation && !validation->empty() && config.eval_every > 0 && (step + 1) % config.eval_every == 0) {
      const auto report = evaluate(net, *validation);
      result.log.evals.push_back({step + 1, report.acc, report.miou});
    }
  }
  result.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<SparseLabelMap> predict(const Net& net, const std::vector<Sample>& samples) {
  std::vector<SparseLabelMap> out(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < long(samples.size()); ++i) {
    const auto state = net.forward(to_planar(samples[i].image), nn::kClassifier);
    out[i] = argmax_labels(state.logits);
  }
  return out;
}

ConfusionMatrix evaluate_confusion(const Net& net, const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidInput("cannot evaluate an empty split");
  const auto predictions = predict(net, samples);
  std::vector<LabelPair> pairs;
  for (std::size_t i = 0; i < samples.size(); ++i) pairs.push_back({&predictions[i], &samples[i].labels});
  return confusion_batch(pairs, net.shape().categories);
}

MetricsReport evaluate(const Net& net, const std::vector<Sample>& samples) {
  return summarize(evaluate_confusion(net, samples));
}

std::vector<PseudoView> pseudo_labels(const Net& net, const std::vector<Sample>& samples,
                                      const ThresholdPolicy& policy) {
  policy.validate();
  std::vector<PseudoView> out(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < long(samples.size()); ++i) {
    const auto state = net.forward(to_planar(samples[i].image), nn::kClassifier | nn::kDiscriminator);
    const CertaintyMap cm{state.certainty.height, state.certainty.width,
                          std::vector<double>(state.certainty.data.begin(), state.certainty.data.end())};
    const SparseLabelMap merged = merge_labels(select_confident(argmax_labels(state.logits), cm, policy),
                                               samples[i].labels);
    out[i] = {merged, pseudo_coverage(merged, samples[i].labels)};
  }
  return out;
}

}  // namespace terraseg
