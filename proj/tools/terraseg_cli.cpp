#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "terraseg/config.hpp"
#include "terraseg/dataset.hpp"
#include "terraseg/lbp.hpp"
#include "terraseg/masking.hpp"
#include "terraseg/metrics.hpp"
#include "terraseg/png_io.hpp"
#include "terraseg/pseudo_label.hpp"
#include "terraseg/synth.hpp"
#include "terraseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace terraseg;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingInput = 3,
  kConflict = 4,
  kDiverged = 5,
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

class MissingInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "missing-input"; }
};

int report_error(const std::string& kind, int code, const std::string& message) {
  nlohmann::json j{{"error", kind}, {"exit", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return code;
}

// One subcommand: its own keys, each exposed as `--key` and settable from
// the config file or a TERRASEG_* environment variable.
struct Command {
  std::string name;
  std::string help;
  KeyValues defaults;
  std::vector<std::string> flags;  // value-less switches
  std::function<void(const KeyValues&, const fs::path&)> run;
  bool train = false;  // also takes every TrainConfig key
};

const std::vector<std::string>& train_keys() {
  static const std::vector<std::string> keys = TrainConfig::keys();
  return keys;
}

TrainConfig train_config(const KeyValues& kv) {
  KeyValues sub;
  for (const auto& key : train_keys())
    if (auto it = kv.find(key); it != kv.end()) sub[key] = it->second;
  TrainConfig config;
  config.apply(sub);
  config.validate();
  return config;
}

const std::string& need(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end() || it->second.empty()) throw UsageError("--" + key + " is required");
  return it->second;
}

long to_long(const KeyValues& kv, const std::string& key) {
  const std::string& v = need(kv, key);
  try {
    std::size_t used = 0;
    const long out = std::stol(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw UsageError("--" + key + " expects an integer, got '" + v + "'");
}

double to_double(const KeyValues& kv, const std::string& key) {
  const std::string& v = need(kv, key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw UsageError("--" + key + " expects a number, got '" + v + "'");
}

bool to_bool(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) return false;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0" || it->second.empty()) return false;
  throw UsageError("--" + key + " expects true or false, got '" + it->second + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> number_list(const KeyValues& kv, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(need(kv, key))) {
    KeyValues one{{key, item}};
    out.push_back(to_double(one, key));
  }
  return out;
}

fs::path existing(const KeyValues& kv, const std::string& key) {
  fs::path p = need(kv, key);
  if (!fs::exists(p)) throw MissingInput(p.string() + ": no such file or directory");
  return p;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Data {
  DatasetManifest manifest;
  fs::path root;
  std::vector<Sample> of(Split split) const { return load_samples(manifest, split, root); }
};

Data open_data(const KeyValues& kv) {
  const fs::path root = existing(kv, "data");
  const fs::path manifest = root / "manifest.csv";
  if (!fs::exists(manifest)) throw MissingInput(manifest.string() + ": no manifest in data directory");
  return {read_manifest(manifest), root};
}

void write_log(const fs::path& out, const std::string& prefix, const TrainLog& log) {
  write_text_atomic(out / (prefix + "_steps.csv"), log.steps_csv());
  if (!log.evals.empty()) write_text_atomic(out / (prefix + "_evals.csv"), log.evals_csv());
}

// ---- subcommands ---------------------------------------------------------

void run_synth(const KeyValues& kv, const fs::path& out) {
  SynthTextureSpec spec;
  std::map<std::string, std::string> sub;
  for (const auto& [k, v] : spec.to_map())
    if (kv.count(k)) sub[k] = kv.at(k);
  spec.apply(sub);
  spec.validate();
  const long n = to_long(kv, "n");
  if (n <= 0) throw UsageError("--n must be positive");
  SplitCounts counts{std::size_t(to_long(kv, "train")), std::size_t(to_long(kv, "val")),
                     std::size_t(to_long(kv, "test"))};
  if (counts.total() == 0) counts = default_split_counts(std::size_t(n));
  if (counts.total() != std::size_t(n)) throw UsageError("--train + --val + --test must equal --n");
  const auto manifest = synth_generate(spec, std::size_t(n), std::uint64_t(to_long(kv, "seed")), counts, out);
  std::cout << "wrote " << manifest.entries.size() << " samples to " << out.string() << "\n";
}

void run_lbp_extract(const KeyValues& kv, const fs::path& out) {
  const fs::path image = existing(kv, "image");
  LbpConfig cfg{int(to_long(kv, "p")), to_double(kv, "r")};
  cfg.validate();
  const int patch = int(to_long(kv, "patch"));
  const auto gray = to_grayscale(read_image(image));
  const auto codes = lbp_map(gray, cfg);
  const auto hist = lbp_histograms(codes, patch);
  const std::string stem = image.stem().string();
  write_histogram_file(out / (stem + ".lbp"), hist);
  write_gray8(out / (stem + "_codes.png"), codes.height, codes.width, code_map_preview(codes));
  std::cout << "histograms " << hist.grid_height << "x" << hist.grid_width << "x" << hist.bins << "\n";
}

MaskSpec mask_spec(const KeyValues& kv) {
  KeyValues sub{{"mask-type", need(kv, "type")}, {"mask-ratio", need(kv, "ratio")}, {"mask-patch", need(kv, "patch")}};
  for (const auto& key : train_keys())
    if (key.rfind("ff-", 0) == 0 && kv.count(key)) sub[key] = kv.at(key);
  TrainConfig c;
  c.apply(sub);
  return c.mask;
}

void run_mask_gen(const KeyValues& kv, const fs::path& out) {
  const MaskSpec spec = mask_spec(kv);
  const int h = int(to_long(kv, "height"));
  const int w = int(to_long(kv, "width"));
  const long count = to_long(kv, "count");
  const long seed = to_long(kv, "seed");
  if (count <= 0) throw UsageError("--count must be positive");
  if (to_bool(kv, "calibrate")) {
    std::string csv = "type,ratio,seed,realized,masked_patches\n";
    double sum = 0.0;
    for (long s = seed; s < seed + count; ++s) {
      const auto m = generate_mask(h, w, spec, std::uint64_t(s));
      const auto pm = to_patch_mask(m, spec.patch);
      sum += m.ratio();
      csv += to_string(spec.type) + "," + fmt(spec.ratio) + "," + std::to_string(s) + "," + fmt(m.ratio()) + "," +
             std::to_string(pm.masked_count()) + "\n";
    }
    write_text_atomic(out / "calibration.csv", csv);
    std::cout << "mean realized ratio " << fmt(sum / double(count)) << "\n";
    return;
  }
  for (long s = seed; s < seed + count; ++s)
    write_mask(out / ("mask_" + to_string(spec.type) + "_" + std::to_string(s) + ".png"),
               generate_mask(h, w, spec, std::uint64_t(s)));
  std::cout << "wrote " << count << " masks\n";
}

void run_stats(const KeyValues& kv, const fs::path& out) {
  const Data data = open_data(kv);
  const auto s = stats(data.manifest, data.root);
  write_text_atomic(out / "stats.csv", stats_csv(s, data.manifest.categories));
  std::cout << "labeled " << s.labeled_pixels << " of " << s.total_pixels << " pixels\n";
}

void run_pretrain(const KeyValues& kv, const fs::path& out) {
  const TrainConfig config = train_config(kv);
  const Data data = open_data(kv);
  const auto result = pretrain(config, data.of(Split::Train));
  save_checkpoint(out / "pretrain.ckpt", result.net);
  write_log(out, "pretrain", result.log);
  std::cout << "final loss " << fmt(result.log.steps.empty() ? 0.0 : result.log.steps.back().loss) << "\n";
}

std::optional<Net> initial_net(const KeyValues& kv) {
  auto it = kv.find("init");
  if (it == kv.end() || it->second.empty()) return std::nullopt;
  return load_checkpoint(existing(kv, "init"));
}

void run_finetune(const KeyValues& kv, const fs::path& out) {
  const TrainConfig config = train_config(kv);
  const Data data = open_data(kv);
  const auto init = initial_net(kv);
  const auto val = data.of(Split::Val);
  const auto result = finetune(config, data.of(Split::Train), init ? &*init : nullptr, val.empty() ? nullptr : &val);
  save_checkpoint(out / "finetune.ckpt", result.net);
  write_log(out, "finetune", result.log);
  std::cout << "final loss " << fmt(result.log.steps.empty() ? 0.0 : result.log.steps.back().loss) << "\n";
}

void run_eval(const KeyValues& kv, const fs::path& out) {
  const Data data = open_data(kv);
  const Split split = parse_split(need(kv, "split"));
  const int categories = data.manifest.categories.size();
  ConfusionMatrix cm(categories);
  if (auto it = kv.find("predictions"); it != kv.end() && !it->second.empty()) {
    const fs::path dir = existing(kv, "predictions");
    for (const auto& e : data.manifest.of(split)) {
      const auto truth = read_labels(data.root / e.label_path, categories);
      const fs::path pred = dir / fs::path(e.label_path).filename();
      if (!fs::exists(pred)) throw MissingInput(pred.string() + ": missing prediction");
      cm += confusion(read_labels(pred, categories), truth, categories);
    }
  } else {
    const Net net = load_checkpoint(existing(kv, "checkpoint"));
    cm = evaluate_confusion(net, data.of(split));
  }
  const auto report = summarize(cm);
  write_text_atomic(out / "metrics.csv", metrics_csv(report, data.manifest.categories.names));
  std::cout << "mIoU " << fmt(report.miou) << " ACC " << fmt(report.acc) << "\n";
}

void run_sweep_threshold(const KeyValues& kv, const fs::path& out) {
  TrainConfig config = train_config(kv);
  if (!(config.weights.pseudo > 0.0)) throw ConfigConflict("sweep-threshold needs lambda-pseudo > 0");
  const Data data = open_data(kv);
  const auto train = data.of(Split::Train);
  const auto test = data.of(Split::Test);
  const auto init = initial_net(kv);
  std::string csv = "threshold,coverage,acc,miou\n";
  for (double t : number_list(kv, "thresholds")) {
    config.threshold.threshold = t;
    config.validate();
    const auto result = finetune(config, train, init ? &*init : nullptr);
    const auto report = evaluate(result.net, test);
    double coverage = 0.0;
    const auto views = pseudo_labels(result.net, train, config.threshold);
    for (const auto& v : views) coverage += v.coverage / double(views.size());
    csv += fmt(t) + "," + fmt(coverage) + "," + fmt(report.acc) + "," + fmt(report.miou) + "\n";
    write_text_atomic(out / "sweep_threshold.csv", csv);
    std::cout << "t=" << fmt(t) << " coverage " << fmt(coverage) << " mIoU " << fmt(report.miou) << "\n";
  }
}

void run_sweep_mask(const KeyValues& kv, const fs::path& out) {
  TrainConfig config = train_config(kv);
  const Data data = open_data(kv);
  const auto train = data.of(Split::Train);
  const auto test = data.of(Split::Test);
  std::string csv = "type,ratio,acc,miou\n";
  for (const auto& type : split_list(need(kv, "types")))
    for (double ratio : number_list(kv, "ratios")) {
      config.mask.type = parse_mask_type(type);
      config.mask.ratio = ratio;
      config.validate();
      const auto pre = pretrain(config, train);
      const auto report = evaluate(finetune(config, train, &pre.net).net, test);
      csv += type + "," + fmt(ratio) + "," + fmt(report.acc) + "," + fmt(report.miou) + "\n";
      write_text_atomic(out / "sweep_mask.csv", csv);
      std::cout << type << " " << fmt(ratio) << " mIoU " << fmt(report.miou) << "\n";
    }
}

void run_pseudo(const KeyValues& kv, const fs::path& out) {
  const Data data = open_data(kv);
  const Net net = load_checkpoint(existing(kv, "checkpoint"));
  const ThresholdPolicy policy{to_double(kv, "threshold")};
  policy.validate();
  const Split split = parse_split(need(kv, "split"));
  const auto samples = data.of(split);
  const auto views = pseudo_labels(net, samples, policy);
  fs::create_directories(out / "merged");
  std::string csv = "sample,threshold,coverage\n";
  double mean = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_labels(out / "merged" / (fs::path(samples[i].id).stem().string() + ".png"), views[i].merged);
    csv += samples[i].id + "," + fmt(policy.threshold) + "," + fmt(views[i].coverage) + "\n";
    mean += views[i].coverage / double(samples.size());
  }
  write_text_atomic(out / "coverage.csv", csv);
  std::cout << "mean coverage " << fmt(mean) << "\n";
}

// ---- report: CSV -> SVG line chart --------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput(path.string() + ": cannot open");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": empty CSV");
  t.header = split_list(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    cells.resize(t.header.size());
    t.rows.push_back(cells);
  }
  return t;
}

std::optional<double> number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string svg_chart(const Table& t, const std::string& title) {
  constexpr double W = 640, H = 400, L = 60, R = 160, T = 40, B = 50;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  bool numeric_x = !t.rows.empty();
  for (const auto& r : t.rows) numeric_x = numeric_x && number(r[0]).has_value();
  std::vector<double> xs;
  for (std::size_t i = 0; i < t.rows.size(); ++i) xs.push_back(numeric_x ? *number(t.rows[i][0]) : double(i));

  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
  };
  std::vector<Series> series;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    Series s{t.header[c], {}};
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      if (auto v = number(t.rows[i][c])) s.points.emplace_back(xs[i], *v);
    if (!s.points.empty()) series.push_back(std::move(s));
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    const double xv = x0 + (x1 - x0) * k / 4.0;
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << (numeric_x ? t.header[0] : "row") << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % std::size(palette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[i].points) o << px(x) << "," << py(y) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (i + 1) << "\" fill=\"" << color << "\">"
      << series[i].name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void run_report(const KeyValues& kv, const fs::path& out) {
  const auto inputs = split_list(need(kv, "input"));
  for (const auto& input : inputs) {
    const fs::path path = input;
    const Table table = read_csv(path);
    write_text_atomic(out / (path.stem().string() + ".svg"), svg_chart(table, path.filename().string()));
  }
  std::cout << "rendered " << inputs.size() << " chart(s)\n";
}

std::vector<Command> commands() {
  SynthTextureSpec synth_defaults;
  KeyValues synth_kv{{"n", "200"}, {"seed", "1"}, {"train", "0"}, {"val", "0"}, {"test", "0"}};
  for (const auto& [k, v] : synth_defaults.to_map()) synth_kv[k] = v;

  KeyValues mask_kv{{"type", "freeform"}, {"ratio", "0.6"}, {"patch", "32"}, {"seed", "1"},
                    {"height", "64"},     {"width", "64"},  {"count", "1"}};
  for (const auto& [k, v] : TrainConfig{}.to_key_values())
    if (k.rfind("ff-", 0) == 0) mask_kv[k] = v;

  const std::string thresholds = "0.3,0.5,0.7,0.9,0.99,0.999";
  return {
      {"synth", "Generate a synthetic texture dataset", synth_kv, {}, run_synth},
      {"lbp-extract", "LBP histogram map and code preview of one image",
       {{"image", ""}, {"p", "24"}, {"r", "3"}, {"patch", "32"}}, {}, run_lbp_extract},
      {"mask-gen", "Write masks, or a calibration CSV of realized ratios", mask_kv, {"calibrate"}, run_mask_gen},
      {"stats", "Category and sparsity statistics of a dataset", {{"data", ""}}, {}, run_stats},
      {"pretrain", "Self-supervised pre-training", {{"data", ""}}, {}, run_pretrain, true},
      {"finetune", "Sparse-label fine-tuning with pseudo-labels",
       {{"data", ""}, {"init", ""}}, {}, run_finetune, true},
      {"eval", "Confusion-matrix metrics of a checkpoint or label PNGs",
       {{"data", ""}, {"checkpoint", ""}, {"predictions", ""}, {"split", "test"}}, {}, run_eval},
      {"sweep-threshold", "Fine-tune and evaluate once per certainty threshold",
       {{"data", ""}, {"init", ""}, {"thresholds", thresholds}}, {}, run_sweep_threshold, true},
      {"sweep-mask", "Pre-train, fine-tune and evaluate over mask types and ratios",
       {{"data", ""}, {"types", "rect,patch,freeform"}, {"ratios", "0.3,0.4,0.5,0.6,0.7"}}, {}, run_sweep_mask, true},
      {"report", "Render CSV files as SVG line charts", {{"input", ""}}, {}, run_report},
      {"pseudo", "Dump merged pseudo-label PNGs and a coverage CSV",
       {{"data", ""}, {"checkpoint", ""}, {"threshold", "0.9"}, {"split", "train"}}, {}, run_pseudo},
  };
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Sparse-label terrain segmentation: synthesis, LBP, masking, training, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "terraseg 1.0");
  const auto cmds = commands();

  struct Bound {
    const Command* cmd;
    CLI::App* app;
    std::string config;
    std::string out = ".";
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Bound& b = bound[i];
    b.cmd = &cmds[i];
    b.app = app.add_subcommand(cmds[i].name, cmds[i].help);
    b.app->add_option("--config", b.config, "key = value file; flags and environment override it");
    b.app->add_option("--out", b.out, "output directory")->capture_default_str();
    for (const auto& [key, def] : cmds[i].defaults) {
      std::string desc = def.empty() ? "" : "default " + def;
      b.options[key] = b.app->add_option("--" + key, b.values[key], desc);
    }
    if (cmds[i].train)
      for (const auto& [key, def] : TrainConfig{}.to_key_values())
        b.options[key] = b.app->add_option("--" + key, b.values[key], "default " + def);
    for (const auto& key : cmds[i].flags) b.options[key] = b.app->add_flag("--" + key, "switch");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", kUsage, e.what());
  }

  for (const Bound& b : bound) {
    if (!b.app->parsed()) continue;
    KeyValues kv = b.cmd->defaults;
    std::vector<std::string> keys;
    for (const auto& [k, v] : b.cmd->defaults) keys.push_back(k);
    keys.insert(keys.end(), b.cmd->flags.begin(), b.cmd->flags.end());
    if (b.cmd->train) keys.insert(keys.end(), train_keys().begin(), train_keys().end());
    if (!b.config.empty()) {
      if (!fs::exists(b.config)) throw MissingInput(b.config + ": config file not found");
      for (const auto& [k, v] : read_key_values(b.config)) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
          throw UsageError(b.config + ": unknown key '" + k + "' for " + b.cmd->name);
        kv[k] = v;
      }
    }
    for (const auto& [k, v] : env_overrides(keys)) kv[k] = v;
    for (const auto& [k, opt] : b.options)
      if (opt->count() > 0) kv[k] = b.values.count(k) ? b.values.at(k) : "true";

    KeyValues effective = kv;
    if (b.cmd->train)
      for (const auto& [k, v] : train_config(kv).to_key_values()) effective[k] = v;
    const fs::path out = b.out;
    fs::create_directories(out);
    write_text_atomic(out / (b.cmd->name + ".config"), key_values_to_text(effective));
    b.cmd->run(kv, out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const UsageError& e) {
    return report_error(e.kind(), kUsage, e.what());
  } catch (const InvalidInput& e) {
    return report_error(e.kind(), kUsage, e.what());
  } catch (const MissingInput& e) {
    return report_error(e.kind(), kMissingInput, e.what());
  } catch (const IoError& e) {
    return report_error(e.kind(), kMissingInput, e.what());
  } catch (const ConfigConflict& e) {
    return report_error(e.kind(), kConflict, e.what());
  } catch (const Divergence& e) {
    return report_error(e.kind(), kDiverged, e.what());
  } catch (const Error& e) {
    return report_error(e.kind(), kFailure, e.what());
  } catch (const std::exception& e) {
    return report_error("internal", kFailure, e.what());
  }
}
