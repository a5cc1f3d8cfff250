#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "terraseg/lbp.hpp"
#include "terraseg/losses.hpp"
#include "terraseg/masking.hpp"
#include "terraseg/pseudo_label.hpp"

namespace terraseg {

using KeyValues = std::map<std::string, std::string>;

// `key = value` lines; '#' starts a comment.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string key_values_to_text(const KeyValues& kv);

// Prefix of environment variables overriding config keys: key `mask-ratio`
// is read from TERRASEG_MASK_RATIO.
inline constexpr const char* kEnvPrefix = "TERRASEG_";
std::string env_name(const std::string& key);
// Values of `keys` found in the environment.
KeyValues env_overrides(const std::vector<std::string>& keys);

struct TrainConfig {
  std::uint64_t seed = 1;
  int batch_size = 16;
  long pretrain_steps = 1000;
  long finetune_steps = 1000;
  long pseudo_start = -1;  // < 0: 60% of finetune_steps
  double lr = 0.01;
  double momentum = 0.9;
  MaskSpec mask;
  LbpConfig lbp;
  int lbp_patch = 32;
  LossWeights weights;
  ThresholdPolicy threshold;
  int width1 = 8;
  int width2 = 16;
  int width3 = 32;
  long eval_every = 0;  // 0 disables periodic validation
  bool disc_to_encoder = false;

  long effective_pseudo_start() const;
  // Throws InvalidInput for bad values; ConfigConflict for inconsistent ones.
  void validate() const;

  KeyValues to_key_values() const;
  // Applies the recognized keys; unknown keys throw InvalidInput. A mask
  // type given without a ratio takes that type's default ratio.
  void apply(const KeyValues& kv);
  static std::vector<std::string> keys();
};

class ConfigConflict : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config-conflict"; }
};

}  // namespace terraseg
