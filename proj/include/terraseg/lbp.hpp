#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "terraseg/image.hpp"

namespace terraseg {

// Rotation-invariant uniform LBP ("riu2") with P circular neighbors at
// radius R. Codes 0..P count the set bits of uniform patterns; code P+1
// pools every nonuniform pattern.
struct LbpConfig {
  int points = 24;
  double radius = 3.0;

  int bins() const { return points + 2; }
  void validate() const;  // P in [4, 64], R >= 1
};

// P neighbor values of pixel (y, x), bilinearly interpolated on the circle;
// coordinates falling outside the image are clamped to the border.
std::vector<double> sample_neighbors(const ImageTensor& gray, int y, int x, const LbpConfig& cfg);

// Number of circular 0/1 transitions in the low `points` bits.
int uniformity(std::uint64_t bits, int points);

int riu2_code(std::uint64_t bits, int points);

struct LbpCodeMap {
  int height = 0;
  int width = 0;
  int points = 0;
  std::vector<std::uint8_t> codes;

  int at(int y, int x) const { return codes[std::size_t(y) * width + x]; }
  bool operator==(const LbpCodeMap&) const = default;
};

// Unit-length occurrence histograms on a patch grid, stored [row][col][bin].
struct LbpHistogramMap {
  int grid_height = 0;
  int grid_width = 0;
  int bins = 0;
  std::vector<double> values;

  std::size_t patch_count() const { return std::size_t(grid_height) * grid_width; }
  const double* patch(int gy, int gx) const { return values.data() + (std::size_t(gy) * grid_width + gx) * bins; }
  double* patch(int gy, int gx) { return values.data() + (std::size_t(gy) * grid_width + gx) * bins; }
  bool operator==(const LbpHistogramMap&) const = default;
};

// Bit k is set iff neighbor k >= center. OpenMP over rows.
LbpCodeMap lbp_map(const ImageTensor& gray, const LbpConfig& cfg);
LbpCodeMap lbp_map_serial(const ImageTensor& gray, const LbpConfig& cfg);

// Patches tile the map from the top-left; trailing patches may be partial.
LbpHistogramMap lbp_histograms(const LbpCodeMap& codes, int patch);
LbpHistogramMap lbp_histograms_serial(const LbpCodeMap& codes, int patch);

// Grayscale conversion + code map + histograms.
LbpHistogramMap lbp_target(const ImageTensor& img, const LbpConfig& cfg, int patch);

// Header: grid_height, grid_width, bins as little-endian int32; then float32
// values in [row][col][bin] order.
void write_histogram_file(const std::filesystem::path& path, const LbpHistogramMap& hist);
LbpHistogramMap read_histogram_file(const std::filesystem::path& path);

// Codes rescaled to 0..255 for viewing.
std::vector<std::uint8_t> code_map_preview(const LbpCodeMap& codes);

}  // namespace terraseg
