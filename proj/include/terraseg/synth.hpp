#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "terraseg/dataset.hpp"
#include "terraseg/image.hpp"

namespace terraseg {

enum class TextureFamily { FlatNoise, Stripes, Blobs, Checker };

std::string to_string(TextureFamily f);

// Signal amplitudes are relative; the rendered intensity is
// base + contrast * texture + sensor noise, tinted per image.
struct TextureParams {
  TextureFamily family = TextureFamily::FlatNoise;
  double noise_sigma = 0.5;  // flat
  double period = 6.0;       // stripes, checker cell, blob cell (pixels)
  double angle = 0.0;        // stripes/checker orientation (radians)
};

// Procedural texture-segmentation data. Regions are Voronoi cells with a
// random category; every category has the same mean brightness so only
// texture separates them. Labels are sparsified by eroding each category
// region by `erosion` pixels and dropping labeled pixels at `dropout` rate.
struct SynthTextureSpec {
  int height = 64;
  int width = 64;
  int categories = 4;
  std::vector<TextureParams> textures;  // empty = built-in family per category
  int regions_min = 3;
  int regions_max = 6;
  int erosion = 3;
  double dropout = 0.0;
  double contrast = 0.3;
  double sensor_noise = 0.04;
  double brightness_jitter = 0.08;
  double angle_jitter = 0.35;  // radians
  double period_jitter = 0.2;  // relative

  std::vector<TextureParams> effective_textures() const;
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  void apply(const std::map<std::string, std::string>& kv);
};

struct SynthSample {
  ImageTensor image;      // quantized to 8-bit levels, as stored on disk
  SparseLabelMap labels;  // sparse training labels
  SparseLabelMap dense;   // generating region map
};

SynthSample synth_sample(const SynthTextureSpec& spec, std::uint64_t seed, std::size_t index);
std::vector<SynthSample> synth_samples(const SynthTextureSpec& spec, std::size_t n, std::uint64_t seed);

// Chebyshev-radius erosion of each category region (k = 0 keeps every pixel).
SparseLabelMap erode_labels(const SparseLabelMap& dense, int k);

// Writes images/NNNNNN.png, labels/NNNNNN.png, dense/NNNNNN.png, manifest.csv
// and synth_spec.txt under `out_dir`; returns the manifest.
DatasetManifest synth_generate(const SynthTextureSpec& spec, std::size_t n, std::uint64_t seed,
                               const SplitCounts& counts, const std::filesystem::path& out_dir);

}  // namespace terraseg
