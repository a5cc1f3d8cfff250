#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "terraseg/image.hpp"

namespace terraseg {

enum class Split { Train, Val, Test };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct ManifestEntry {
  std::string image_path;
  std::string label_path;
  Split split = Split::Train;

  bool operator==(const ManifestEntry&) const = default;
};

// Records are `image_path,label_path,split`, one per line. Paths are
// relative to the manifest's directory unless absolute. Lines starting
// with '#' carry metadata (`# seed=`, `# categories=a;b;c`).
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  CategoryTable categories;
  std::uint64_t seed = 0;

  std::vector<ManifestEntry> of(Split split) const;
  // Throws InvalidInput if a path appears in two splits.
  void validate() const;
  bool operator==(const DatasetManifest& o) const {
    return entries == o.entries && categories.names == o.categories.names && seed == o.seed;
  }
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  std::size_t total() const { return train + val + test; }
};

// 5000 : 200 : 800 proportions; test takes the rounding remainder.
SplitCounts default_split_counts(std::size_t available);

// Deterministic shuffle of the (image, label) pairs followed by a cut into
// train/val/test. Samples beyond counts.total() are left out.
DatasetManifest split(const std::vector<std::pair<std::string, std::string>>& samples, std::uint64_t seed,
                      const SplitCounts& counts, const CategoryTable& categories);

std::string manifest_to_text(const DatasetManifest& manifest);
DatasetManifest manifest_from_text(const std::string& text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct Sample {
  std::string id;
  ImageTensor image;
  SparseLabelMap labels;
};

// Loads every entry of `split`; relative paths resolve against `root`.
std::vector<Sample> load_samples(const DatasetManifest& manifest, Split split, const std::filesystem::path& root);

struct DatasetStats {
  // images_by_category_count[k] = images with exactly k labeled categories
  std::vector<std::size_t> images_by_category_count;
  std::vector<std::uint64_t> category_pixels;
  std::vector<double> category_share;  // of all labeled pixels
  std::uint64_t labeled_pixels = 0;
  std::uint64_t total_pixels = 0;

  double unlabeled_fraction() const;
};

DatasetStats stats(const std::vector<SparseLabelMap>& labels, int num_categories);
DatasetStats stats(const DatasetManifest& manifest, const std::filesystem::path& root);

// Two sections: `section,key,value` rows for the category-count histogram
// and the per-category area share.
std::string stats_csv(const DatasetStats& s, const CategoryTable& categories);

}  // namespace terraseg
