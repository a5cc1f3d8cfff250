#include "terraseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <map>
#include <set>
#include <sstream>

#include "terraseg/png_io.hpp"

namespace terraseg {
namespace {

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : root / path;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw InvalidInput("unknown split '" + name + "'");
}

std::vector<ManifestEntry> DatasetManifest::of(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [split](const ManifestEntry& e) { return e.split == split; });
  return out;
}

void DatasetManifest::validate() const {
  std::map<std::string, Split> owner;
  for (const auto& e : entries)
    for (const auto& path : {e.image_path, e.label_path}) {
      auto [it, inserted] = owner.emplace(path, e.split);
      if (!inserted && it->second != e.split) throw InvalidInput("path '" + path + "' appears in two splits");
    }
}

SplitCounts default_split_counts(std::size_t available) {
  SplitCounts c;
  c.train = std::size_t(std::llround(double(available) * 5000.0 / 6000.0));
  c.val = std::size_t(std::llround(double(available) * 200.0 / 6000.0));
  c.train = std::min(c.train, available);
  c.val = std::min(c.val, available - c.train);
  c.test = available - c.train - c.val;
  return c;
}

DatasetManifest split(const std::vector<std::pair<std::string, std::string>>& samples, std::uint64_t seed,
                      const SplitCounts& counts, const CategoryTable& categories) {
  if (counts.total() > samples.size())
    throw InvalidInput("split asks for " + std::to_string(counts.total()) + " samples but only " +
                       std::to_string(samples.size()) + " are available");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  DatasetManifest m;
  m.categories = categories;
  m.seed = seed;
  for (std::size_t i = 0; i < counts.total(); ++i) {
    const Split s = i < counts.train ? Split::Train : i < counts.train + counts.val ? Split::Val : Split::Test;
    m.entries.push_back({samples[order[i]].first, samples[order[i]].second, s});
  }
  // keep files in a stable, readable order within each split
  std::stable_sort(m.entries.begin(), m.entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    return a.split != b.split ? a.split < b.split : a.image_path < b.image_path;
  });
  m.validate();
  return m;
}

std::string manifest_to_text(const DatasetManifest& manifest) {
  std::string out = "# seed=" + std::to_string(manifest.seed) + "\n# categories=";
  for (std::size_t i = 0; i < manifest.categories.names.size(); ++i)
    out += (i ? ";" : "") + manifest.categories.names[i];
  out += "\n";
  for (const auto& e : manifest.entries) out += e.image_path + "," + e.label_path + "," + to_string(e.split) + "\n";
  return out;
}

DatasetManifest manifest_from_text(const std::string& text) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string meta = trim(line.substr(1));
      if (meta.rfind("seed=", 0) == 0) m.seed = std::stoull(meta.substr(5));
      if (meta.rfind("categories=", 0) == 0) m.categories.names = split_on(meta.substr(11), ';');
      continue;
    }
    auto fields = split_on(line, ',');
    if (fields.size() != 3) throw InvalidInput("manifest line " + std::to_string(lineno) + ": expected 3 fields");
    m.entries.push_back({trim(fields[0]), trim(fields[1]), parse_split(trim(fields[2]))});
  }
  m.validate();
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  write_text_atomic(path, manifest_to_text(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open manifest");
  std::stringstream buf;
  buf << in.rdbuf();
  return manifest_from_text(buf.str());
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, Split split, const std::filesystem::path& root) {
  if (manifest.categories.size() == 0) throw InvalidInput("manifest has no category table");
  std::vector<Sample> out;
  for (const auto& e : manifest.of(split)) {
    Sample s;
    s.id = std::filesystem::path(e.image_path).stem().string();
    s.image = read_image(resolve(root, e.image_path));
    s.labels = read_labels(resolve(root, e.label_path), manifest.categories.size());
    if (s.image.height() != s.labels.height() || s.image.width() != s.labels.width())
      throw InvalidInput(e.image_path + ": image and label sizes differ");
    out.push_back(std::move(s));
  }
  return out;
}

double DatasetStats::unlabeled_fraction() const {
  return total_pixels == 0 ? 0.0 : 1.0 - double(labeled_pixels) / double(total_pixels);
}

DatasetStats stats(const std::vector<SparseLabelMap>& labels, int num_categories) {
  DatasetStats s;
  s.images_by_category_count.assign(std::size_t(num_categories) + 1, 0);
  s.category_pixels.assign(std::size_t(num_categories), 0);
  for (const auto& map : labels) {
    map.validate();
    std::vector<bool> seen(std::size_t(num_categories), false);
    for (std::size_t i = 0; i < map.size(); ++i) {
      const int v = map[i];
      if (v == kUnlabeled) continue;
      if (v >= num_categories) throw InvalidInput("label outside category table");
      seen[v] = true;
      ++s.category_pixels[v];
      ++s.labeled_pixels;
    }
    s.total_pixels += map.size();
    ++s.images_by_category_count[std::size_t(std::count(seen.begin(), seen.end(), true))];
  }
  s.category_share.assign(std::size_t(num_categories), 0.0);
  if (s.labeled_pixels > 0)
    for (int c = 0; c < num_categories; ++c) s.category_share[c] = double(s.category_pixels[c]) / double(s.labeled_pixels);
  return s;
}

DatasetStats stats(const DatasetManifest& manifest, const std::filesystem::path& root) {
  std::vector<SparseLabelMap> maps;
  for (const auto& e : manifest.entries) maps.push_back(read_labels(resolve(root, e.label_path), manifest.categories.size()));
  return stats(maps, manifest.categories.size());
}

std::string stats_csv(const DatasetStats& s, const CategoryTable& categories) {
  std::ostringstream out;
  out << "section,key,value\n";
  for (std::size_t k = 0; k < s.images_by_category_count.size(); ++k)
    out << "label_count," << k << "," << s.images_by_category_count[k] << "\n";
  for (std::size_t c = 0; c < s.category_share.size(); ++c) {
    const std::string name = int(c) < categories.size() ? categories.names[c] : "c" + std::to_string(c);
    out << "area_share," << name << "," << s.category_share[c] << "\n";
  }
  out << "pixels,labeled," << s.labeled_pixels << "\n";
  out << "pixels,total," << s.total_pixels << "\n";
  out << "pixels,unlabeled_fraction," << s.unlabeled_fraction() << "\n";
  return out.str();
}

}  // namespace terraseg
