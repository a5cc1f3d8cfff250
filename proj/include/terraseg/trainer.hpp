#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "terraseg/config.hpp"
#include "terraseg/dataset.hpp"
#include "terraseg/metrics.hpp"
#include "terraseg/nn/refnet.hpp"

namespace terraseg {

using Net = nn::RefNet<float>;

struct StepRecord {
  long step = 0;
  std::string phase;  // "pretrain" or "finetune"
  double loss = 0.0;
  double inp = 0.0;
  double lbp = 0.0;
  double ce = 0.0;
  double pseudo = 0.0;
  double dice = 0.0;
  double coverage = 0.0;
};

struct EvalRecord {
  long step = 0;
  double acc = 0.0;
  double miou = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  double wall_seconds = 0.0;

  std::string steps_csv() const;
  std::string evals_csv() const;
};

struct TrainResult {
  Net net;
  TrainLog log;
};

// Network shape for `samples` under `config` (input size, categories, LBP bins).
nn::RefNetShape network_shape(const TrainConfig& config, const std::vector<Sample>& samples);

// Self-supervised pre-training on the images of `samples` (labels unused):
// masked input x*(1-M), reconstruction and LBP-histogram heads, losses on the
// masked region only. Throws Divergence on a non-finite loss.
TrainResult pretrain(const TrainConfig& config, const std::vector<Sample>& samples);

// Fine-tuning with cross-entropy on the sparse labels and a dice-trained
// labeledness discriminator; from effective_pseudo_start() on (and when
// lambda-pseudo > 0) confident predictions are merged into the targets.
// `init` provides encoder weights; heads start from the config seed.
TrainResult finetune(const TrainConfig& config, const std::vector<Sample>& samples, const Net* init,
                     const std::vector<Sample>* validation = nullptr);

ConfusionMatrix evaluate_confusion(const Net& net, const std::vector<Sample>& samples);
MetricsReport evaluate(const Net& net, const std::vector<Sample>& samples);

// Per-sample argmax predictions.
std::vector<SparseLabelMap> predict(const Net& net, const std::vector<Sample>& samples);

struct PseudoView {
  SparseLabelMap merged;
  double coverage = 0.0;
};
// Pseudo-labels a trained net would add to each sample at `policy`.
std::vector<PseudoView> pseudo_labels(const Net& net, const std::vector<Sample>& samples,
                                      const ThresholdPolicy& policy);

// Planar float copy of an interleaved image.
Tensor<float> to_planar(const ImageTensor& img);

// Checkpoint: "TSEGCKPT", version, network shape, then per parameter its
// name, dims and little-endian float32 values.
void save_checkpoint(const std::filesystem::path& path, const Net& net);
Net load_checkpoint(const std::filesystem::path& path);

}  // namespace terraseg
