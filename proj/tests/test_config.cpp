#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "helpers.hpp"
#include "terraseg/config.hpp"
#include "terraseg/error.hpp"

using namespace terraseg;

TEST(KeyValues, Parse) {
  const auto kv = parse_key_values("# comment\nlr = 0.02\n\n  seed=7   # trailing\nmask-type = patch\n");
  EXPECT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv.at("lr"), "0.02");
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_EQ(kv.at("mask-type"), "patch");
  EXPECT_THROW(parse_key_values("no equals sign\n"), InvalidInput);
  EXPECT_EQ(parse_key_values(key_values_to_text(kv)), kv);
}

TEST(KeyValues, ReadFile) {
  testutil::TempDir dir;
  std::ofstream(dir / "a.config") << "batch-size = 4\n";
  EXPECT_EQ(read_key_values(dir / "a.config").at("batch-size"), "4");
  EXPECT_THROW(read_key_values(dir / "missing.config"), IoError);
}

TEST(Env, NameAndOverride) {
  EXPECT_EQ(env_name("mask-ratio"), "TERRASEG_MASK_RATIO");
  ::setenv("TERRASEG_LAMBDA_LBP", "0.25", 1);
  ::unsetenv("TERRASEG_SEED");
  const auto kv = env_overrides({"lambda-lbp", "seed"});
  ::unsetenv("TERRASEG_LAMBDA_LBP");
  EXPECT_EQ(kv.size(), 1u);
  EXPECT_EQ(kv.at("lambda-lbp"), "0.25");
}

TEST(TrainConfig, DefaultsAreValid) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.effective_pseudo_start(), 600);
  EXPECT_DOUBLE_EQ(c.momentum, 0.9);
  EXPECT_DOUBLE_EQ(c.threshold.threshold, 0.9);
}

TEST(TrainConfig, RoundTripThroughKeyValues) {
  TrainConfig c;
  c.apply({{"seed", "42"}, {"lr", "0.003"}, {"mask-type", "rect"}, {"lambda-lbp", "0"}, {"disc-to-encoder", "true"},
           {"lbp-p", "16"}, {"lbp-r", "2"}});
  TrainConfig d;
  d.apply(c.to_key_values());
  EXPECT_EQ(d.to_key_values(), c.to_key_values());
  EXPECT_EQ(d.seed, 42u);
  EXPECT_TRUE(d.disc_to_encoder);
  EXPECT_EQ(d.lbp.points, 16);
}

TEST(TrainConfig, EveryKeyIsRecognized) {
  const auto kv = TrainConfig{}.to_key_values();
  EXPECT_EQ(kv.size(), TrainConfig::keys().size());
  for (const auto& k : TrainConfig::keys()) EXPECT_TRUE(kv.count(k)) << k;
}

TEST(TrainConfig, RejectsBadInput) {
  TrainConfig c;
  EXPECT_THROW(c.apply({{"no-such-key", "1"}}), InvalidInput);
  EXPECT_THROW(c.apply({{"lr", "fast"}}), InvalidInput);
  EXPECT_THROW(c.apply({{"batch-size", "2.5"}}), InvalidInput);
  EXPECT_THROW(c.apply({{"disc-to-encoder", "maybe"}}), InvalidInput);
  EXPECT_THROW(c.apply({{"mask-type", "circle"}}), InvalidInput);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = TrainConfig{};
  bad.threshold.threshold = 1.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(TrainConfig, PseudoStartConflict) {
  TrainConfig c;
  c.apply({{"finetune-steps", "100"}, {"pseudo-start", "150"}});
  EXPECT_THROW(c.validate(), ConfigConflict);
  c.apply({{"lambda-pseudo", "0"}});
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, MaskTypeTakesItsDefaultRatio) {
  TrainConfig c;
  c.apply({{"mask-type", "rect"}});
  EXPECT_DOUBLE_EQ(c.mask.ratio, 0.3);
  c.apply({{"mask-type", "patch"}});
  EXPECT_DOUBLE_EQ(c.mask.ratio, 0.4);
  c.apply({{"mask-type", "freeform"}, {"mask-ratio", "0.5"}});
  EXPECT_DOUBLE_EQ(c.mask.ratio, 0.5);
  c.apply({{"mask-ratio", "0.7"}});
  EXPECT_EQ(c.mask.type, MaskType::Freeform);
  EXPECT_DOUBLE_EQ(c.mask.ratio, 0.7);
}
