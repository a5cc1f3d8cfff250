#include "terraseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "terraseg/png_io.hpp"
#include "terraseg/rng.hpp"

namespace terraseg {
namespace {

constexpr double kTint[3] = {1.0, 0.74, 0.55};

struct RenderedTexture {
  TextureParams params;
  double phase = 0.0;
  double period = 6.0;
  double angle = 0.0;
  std::vector<double> lattice;  // blob value noise
  int lattice_w = 0;
};

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double texture_value(const RenderedTexture& t, int y, int x, std::mt19937_64& rng) {
  switch (t.params.family) {
    case TextureFamily::FlatNoise: return t.params.noise_sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
    case TextureFamily::Stripes: {
      const double u = x * std::cos(t.angle) + y * std::sin(t.angle);
      return std::sin(2.0 * std::numbers::pi * u / t.period + t.phase);
    }
    case TextureFamily::Checker: {
      const double u = x * std::cos(t.angle) + y * std::sin(t.angle);
      const double v = -x * std::sin(t.angle) + y * std::cos(t.angle);
      const double s = std::sin(std::numbers::pi * u / t.period + t.phase) * std::sin(std::numbers::pi * v / t.period);
      return s >= 0.0 ? 0.8 : -0.8;
    }
    case TextureFamily::Blobs: {
      const double gy = y / t.period;
      const double gx = x / t.period;
      const int y0 = int(gy);
      const int x0 = int(gx);
      const double ty = smoothstep(gy - y0);
      const double tx = smoothstep(gx - x0);
      auto at = [&](int yy, int xx) { return t.lattice[std::size_t(yy) * t.lattice_w + xx]; };
      const double top = at(y0, x0) + tx * (at(y0, x0 + 1) - at(y0, x0));
      const double bottom = at(y0 + 1, x0) + tx * (at(y0 + 1, x0 + 1) - at(y0 + 1, x0));
      return 1.4 * (top + ty * (bottom - top));
    }
  }
  return 0.0;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

}  // namespace

std::string to_string(TextureFamily f) {
  switch (f) {
    case TextureFamily::FlatNoise: return "flat";
    case TextureFamily::Stripes: return "stripes";
    case TextureFamily::Blobs: return "blobs";
    case TextureFamily::Checker: return "checker";
  }
  return "?";
}

std::vector<TextureParams> SynthTextureSpec::effective_textures() const {
  if (!textures.empty()) return textures;
  std::vector<TextureParams> out;
  for (int c = 0; c < categories; ++c) {
    const int variant = c / 4;
    TextureParams p;
    switch (c % 4) {
      case 0: p = {TextureFamily::FlatNoise, 0.5 + 0.25 * variant, 0.0, 0.0}; break;
      case 1: p = {TextureFamily::Stripes, 0.0, 6.0 * (1.0 + 0.5 * variant), std::numbers::pi / 4 * variant}; break;
      case 2: p = {TextureFamily::Blobs, 0.0, 9.0 * (1.0 + 0.5 * variant), 0.0}; break;
      case 3: p = {TextureFamily::Checker, 0.0, 3.0 * (1.0 + 0.5 * variant), std::numbers::pi / 6 * variant}; break;
    }
    out.push_back(p);
  }
  return out;
}

void SynthTextureSpec::validate() const {
  if (categories <= 0) throw InvalidInput("synthetic spec needs at least one category");
  if (categories > 254) throw InvalidInput("too many categories for 8-bit label files");
  if (height < 8 || width < 8) throw InvalidInput("synthetic images must be at least 8x8");
  if (regions_min < 1 || regions_max < regions_min) throw InvalidInput("invalid region count range");
  if (erosion < 0) throw InvalidInput("erosion must be nonnegative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidInput("dropout must be in [0, 1)");
  if (!textures.empty() && int(textures.size()) != categories)
    throw InvalidInput("texture list must have one entry per category");
}

std::map<std::string, std::string> SynthTextureSpec::to_map() const {
  return {{"height", std::to_string(height)},
          {"width", std::to_string(width)},
          {"categories", std::to_string(categories)},
          {"regions-min", std::to_string(regions_min)},
          {"regions-max", std::to_string(regions_max)},
          {"erosion", std::to_string(erosion)},
          {"dropout", fmt(dropout)},
          {"contrast", fmt(contrast)},
          {"sensor-noise", fmt(sensor_noise)},
          {"brightness-jitter", fmt(brightness_jitter)},
          {"angle-jitter", fmt(angle_jitter)},
          {"period-jitter", fmt(period_jitter)}};
}

void SynthTextureSpec::apply(const std::map<std::string, std::string>& kv) {
  auto num = [&](const char* key, auto& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      field = static_cast<std::remove_reference_t<decltype(field)>>(std::stod(it->second));
    } catch (const std::exception&) {
      throw InvalidInput(std::string("bad value for ") + key + ": '" + it->second + "'");
    }
  };
  num("height", height);
  num("width", width);
  num("categories", categories);
  num("regions-min", regions_min);
  num("regions-max", regions_max);
  num("erosion", erosion);
  num("dropout", dropout);
  num("contrast", contrast);
  num("sensor-noise", sensor_noise);
  num("brightness-jitter", brightness_jitter);
  num("angle-jitter", angle_jitter);
  num("period-jitter", period_jitter);
}

SparseLabelMap erode_labels(const SparseLabelMap& dense, int k) {
  if (k < 0) throw InvalidInput("erosion radius must be nonnegative");
  SparseLabelMap out = dense;
  if (k == 0) return out;
  const int h = dense.height();
  const int w = dense.width();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int c = dense.at(y, x);
      bool keep = true;
      for (int yy = std::max(0, y - k); keep && yy <= std::min(h - 1, y + k); ++yy)
        for (int xx = std::max(0, x - k); xx <= std::min(w - 1, x + k); ++xx)
          if (dense.at(yy, xx) != c) {
            keep = false;
            break;
          }
      if (!keep) out.at(y, x) = kUnlabeled;
    }
  return out;
}

SynthSample synth_sample(const SynthTextureSpec& spec, std::uint64_t seed, std::size_t index) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(seed, {0x73796e74ULL, index}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int h = spec.height;
  const int w = spec.width;

  // Voronoi layout
  const int regions = std::uniform_int_distribution<int>(spec.regions_min, spec.regions_max)(rng);
  std::vector<double> sy(regions), sx(regions);
  std::vector<int> cat(regions);
  for (int r = 0; r < regions; ++r) {
    sy[r] = unit(rng) * h;
    sx[r] = unit(rng) * w;
    cat[r] = std::uniform_int_distribution<int>(0, spec.categories - 1)(rng);
  }
  SparseLabelMap dense(h, w, spec.categories, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double best_d = 1e300;
      for (int r = 0; r < regions; ++r) {
        const double d = (y - sy[r]) * (y - sy[r]) + (x - sx[r]) * (x - sx[r]);
        if (d < best_d) {
          best_d = d;
          best = r;
        }
      }
      dense.at(y, x) = cat[best];
    }

  // per-image texture instances
  const auto families = spec.effective_textures();
  std::vector<RenderedTexture> tex(static_cast<std::size_t>(spec.categories));
  std::vector<double> base(static_cast<std::size_t>(spec.categories));
  for (int c = 0; c < spec.categories; ++c) {
    RenderedTexture& t = tex[c];
    t.params = families[c];
    t.phase = unit(rng) * 2.0 * std::numbers::pi;
    t.period = std::max(2.0, t.params.period * (1.0 + spec.period_jitter * (2.0 * unit(rng) - 1.0)));
    t.angle = t.params.angle + spec.angle_jitter * (2.0 * unit(rng) - 1.0);
    if (t.params.family == TextureFamily::Blobs) {
      const int lh = int(h / t.period) + 2;
      t.lattice_w = int(w / t.period) + 2;
      t.lattice.resize(std::size_t(lh) * t.lattice_w);
      for (auto& v : t.lattice) v = 2.0 * unit(rng) - 1.0;
    }
    base[c] = 0.5 + spec.brightness_jitter * (2.0 * unit(rng) - 1.0);
  }
  double tint[3];
  for (int k = 0; k < 3; ++k) tint[k] = kTint[k] * (1.0 + 0.06 * (2.0 * unit(rng) - 1.0));

  ImageTensor image(h, w, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int c = dense.at(y, x);
      const double intensity = base[c] + spec.contrast * texture_value(tex[c], y, x, rng);
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(tint[k] * intensity + spec.sensor_noise * gauss(rng), 0.0, 1.0);
        image.at(y, x, k) = float(std::lround(v * 255.0)) / 255.0f;
      }
    }

  // sparsify
  SparseLabelMap labels = erode_labels(dense, spec.erosion);
  if (spec.dropout > 0.0)
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != kUnlabeled && unit(rng) < spec.dropout) labels[i] = kUnlabeled;

  // every category present in the layout keeps at least its deepest pixel
  for (int c = 0; c < spec.categories; ++c) {
    bool present = false;
    bool labeled = false;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      present |= dense[i] == c;
      labeled |= labels[i] == c;
    }
    if (!present || labeled) continue;
    int best_depth = -1;
    std::size_t best_index = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (dense.at(y, x) != c) continue;
        int depth = 0;
        for (int r = 1; r <= std::max(h, w); ++r, ++depth) {
          bool same = true;
          for (int yy = std::max(0, y - r); same && yy <= std::min(h - 1, y + r); ++yy)
            for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx)
              if (dense.at(yy, xx) != c) {
                same = false;
                break;
              }
          if (!same) break;
        }
        if (depth > best_depth) {
          best_depth = depth;
          best_index = std::size_t(y) * w + x;
        }
      }
    labels[best_index] = c;
  }

  return {std::move(image), std::move(labels), std::move(dense)};
}

std::vector<SynthSample> synth_samples(const SynthTextureSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  std::vector<SynthSample> out(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < long(n); ++i) out[i] = synth_sample(spec, seed, std::size_t(i));
  return out;
}

DatasetManifest synth_generate(const SynthTextureSpec& spec, std::size_t n, std::uint64_t seed,
                               const SplitCounts& counts, const std::filesystem::path& out_dir) {
  spec.validate();
  if (counts.total() > n) throw InvalidInput("split counts exceed the number of generated samples");
  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "labels");
  std::filesystem::create_directories(out_dir / "dense");
  std::vector<std::pair<std::string, std::string>> pairs(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < long(n); ++i) {
    const SynthSample s = synth_sample(spec, seed, std::size_t(i));
    const std::string name = sample_name(std::size_t(i)) + ".png";
    write_image(out_dir / "images" / name, s.image);
    write_labels(out_dir / "labels" / name, s.labels);
    write_labels(out_dir / "dense" / name, s.dense);
    pairs[i] = {"images/" + name, "labels/" + name};
  }
  DatasetManifest m = split(pairs, seed, counts, CategoryTable::numbered(spec.categories));
  write_manifest(out_dir / "manifest.csv", m);
  std::string text;
  for (const auto& [k, v] : spec.to_map()) text += k + " = " + v + "\n";
  text += "seed = " + std::to_string(seed) + "\nn = " + std::to_string(n) + "\n";
  write_text_atomic(out_dir / "synth_spec.txt", text);
  return m;
}

}  // namespace terraseg
