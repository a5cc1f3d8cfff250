#include "terraseg/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace terraseg {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// shortest text that parses back to the same double
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidInput("bad numeric value for '" + key + "': '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw InvalidInput("'" + key + "' must be an integer");
  return long(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidInput("bad boolean value for '" + key + "': '" + v + "'");
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

std::string key_values_to_text(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (char c : key) out += c == '-' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

KeyValues env_overrides(const std::vector<std::string>& keys) {
  KeyValues kv;
  for (const auto& k : keys)
    if (const char* v = std::getenv(env_name(k).c_str())) kv[k] = v;
  return kv;
}

long TrainConfig::effective_pseudo_start() const {
  return pseudo_start >= 0 ? pseudo_start : long(std::llround(0.6 * double(finetune_steps)));
}

void TrainConfig::validate() const {
  if (batch_size <= 0) throw InvalidInput("batch-size must be positive");
  if (pretrain_steps <= 0 || finetune_steps <= 0) throw InvalidInput("step counts must be positive");
  if (!(lr > 0.0) || !(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("invalid optimizer settings");
  if (!(mask.ratio > 0.0 && mask.ratio < 1.0)) throw InvalidInput("mask-ratio must be in (0, 1)");
  lbp.validate();
  if (lbp_patch <= 0 || lbp_patch % 4) throw InvalidInput("lbp-patch must be a positive multiple of 4");
  weights.validate();
  threshold.validate();
  mask.freeform.validate();
  if (width1 <= 0 || width2 <= 0 || width3 < 4 || width3 % 4)
    throw InvalidInput("widths must be positive and width3 a multiple of 4");
  if (pseudo_start > finetune_steps && weights.pseudo > 0.0)
    throw ConfigConflict("pseudo-start cannot exceed finetune-steps when lambda-pseudo > 0");
}

std::vector<std::string> TrainConfig::keys() {
  return {"seed",           "batch-size",     "pretrain-steps",   "finetune-steps",   "pseudo-start",
          "lr",             "momentum",       "mask-type",        "mask-ratio",       "mask-patch",
          "ff-strokes-min", "ff-strokes-max", "ff-segments-min",  "ff-segments-max",  "ff-length-min",
          "ff-length-max",  "ff-thickness-min", "ff-thickness-max", "ff-max-strokes", "lbp-p",
          "lbp-r",          "lbp-patch",      "lambda-inp",       "lambda-lbp",       "lambda-ce",
          "lambda-pseudo",  "threshold",      "width1",           "width2",           "width3",
          "eval-every",     "disc-to-encoder"};
}

KeyValues TrainConfig::to_key_values() const {
  const auto& ff = mask.freeform;
  return {{"seed", std::to_string(seed)},
          {"batch-size", std::to_string(batch_size)},
          {"pretrain-steps", std::to_string(pretrain_steps)},
          {"finetune-steps", std::to_string(finetune_steps)},
          {"pseudo-start", std::to_string(effective_pseudo_start())},
          {"lr", fmt(lr)},
          {"momentum", fmt(momentum)},
          {"mask-type", to_string(mask.type)},
          {"mask-ratio", fmt(mask.ratio)},
          {"mask-patch", std::to_string(mask.patch)},
          {"ff-strokes-min", std::to_string(ff.strokes_min)},
          {"ff-strokes-max", std::to_string(ff.strokes_max)},
          {"ff-segments-min", std::to_string(ff.segments_min)},
          {"ff-segments-max", std::to_string(ff.segments_max)},
          {"ff-length-min", fmt(ff.length_min)},
          {"ff-length-max", fmt(ff.length_max)},
          {"ff-thickness-min", fmt(ff.thickness_min)},
          {"ff-thickness-max", fmt(ff.thickness_max)},
          {"ff-max-strokes", std::to_string(ff.max_strokes)},
          {"lbp-p", std::to_string(lbp.points)},
          {"lbp-r", fmt(lbp.radius)},
          {"lbp-patch", std::to_string(lbp_patch)},
          {"lambda-inp", fmt(weights.inp)},
          {"lambda-lbp", fmt(weights.lbp)},
          {"lambda-ce", fmt(weights.ce)},
          {"lambda-pseudo", fmt(weights.pseudo)},
          {"threshold", fmt(threshold.threshold)},
          {"width1", std::to_string(width1)},
          {"width2", std::to_string(width2)},
          {"width3", std::to_string(width3)},
          {"eval-every", std::to_string(eval_every)},
          {"disc-to-encoder", disc_to_encoder ? "true" : "false"}};
}

void TrainConfig::apply(const KeyValues& kv) {
  auto& ff = mask.freeform;
  for (const auto& [k, v] : kv) {
    if (k == "seed") seed = std::uint64_t(to_long(k, v));
    else if (k == "batch-size") batch_size = int(to_long(k, v));
    else if (k == "pretrain-steps") pretrain_steps = to_long(k, v);
    else if (k == "finetune-steps") finetune_steps = to_long(k, v);
    else if (k == "pseudo-start") pseudo_start = to_long(k, v);
    else if (k == "lr") lr = to_double(k, v);
    else if (k == "momentum") momentum = to_double(k, v);
    else if (k == "mask-type") mask.type = parse_mask_type(v);
    else if (k == "mask-ratio") mask.ratio = to_double(k, v);
    else if (k == "mask-patch") mask.patch = int(to_long(k, v));
    else if (k == "ff-strokes-min") ff.strokes_min = int(to_long(k, v));
    else if (k == "ff-strokes-max") ff.strokes_max = int(to_long(k, v));
    else if (k == "ff-segments-min") ff.segments_min = int(to_long(k, v));
    else if (k == "ff-segments-max") ff.segments_max = int(to_long(k, v));
    else if (k == "ff-length-min") ff.length_min = to_double(k, v);
    else if (k == "ff-length-max") ff.length_max = to_double(k, v);
    else if (k == "ff-thickness-min") ff.thickness_min = to_double(k, v);
    else if (k == "ff-thickness-max") ff.thickness_max = to_double(k, v);
    else if (k == "ff-max-strokes") ff.max_strokes = int(to_long(k, v));
    else if (k == "lbp-p") lbp.points = int(to_long(k, v));
    else if (k == "lbp-r") lbp.radius = to_double(k, v);
    else if (k == "lbp-patch") lbp_patch = int(to_long(k, v));
    else if (k == "lambda-inp") weights.inp = to_double(k, v);
    else if (k == "lambda-lbp") weights.lbp = to_double(k, v);
    else if (k == "lambda-ce") weights.ce = to_double(k, v);
    else if (k == "lambda-pseudo") weights.pseudo = to_double(k, v);
    else if (k == "threshold") threshold.threshold = to_double(k, v);
    else if (k == "width1") width1 = int(to_long(k, v));
    else if (k == "width2") width2 = int(to_long(k, v));
    else if (k == "width3") width3 = int(to_long(k, v));
    else if (k == "eval-every") eval_every = to_long(k, v);
    else if (k == "disc-to-encoder") disc_to_encoder = to_bool(k, v);
    else throw InvalidInput("unknown config key '" + k + "'");
  }
  if (kv.count("mask-type") && !kv.count("mask-ratio")) mask.ratio = default_ratio(mask.type);
}

}  // namespace terraseg
