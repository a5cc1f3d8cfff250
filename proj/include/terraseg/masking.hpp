#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "terraseg/image.hpp"

namespace terraseg {

enum class MaskType { Rectangular, Patch, Freeform };

MaskType parse_mask_type(const std::string& name);  // "rect", "patch", "freeform"
std::string to_string(MaskType type);
// rect 0.3, patch 0.4, freeform 0.6
double default_ratio(MaskType type);

// Free-form brush strokes. Lengths and thicknesses are fractions of
// min(H, W). Strokes are drawn in rounds of [strokes_min, strokes_max]
// until the target ratio is first reached; `max_strokes` caps the total.
struct FreeformParams {
  int strokes_min = 1;
  int strokes_max = 8;
  int segments_min = 1;
  int segments_max = 10;
  double length_min = 0.10;
  double length_max = 0.15;
  double thickness_min = 0.05;
  double thickness_max = 0.12;
  double ratio = 0.6;
  int max_strokes = 4096;

  void validate() const;
};

// Patch-level mask over a ceil(H/patch) x ceil(W/patch) grid.
struct PatchMask {
  int grid_height = 0;
  int grid_width = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(int gy, int gx) const { return bits[std::size_t(gy) * grid_width + gx]; }
  std::size_t masked_count() const;
  bool operator==(const PatchMask&) const = default;
};

// One rectangle of area round(ratio*H*W), aspect (w/h) uniform in [0.5, 2].
BinaryMask rect_mask(int height, int width, double ratio, std::uint64_t seed);

// Exactly round-half-up(ratio * N) of the N full patches, without replacement.
BinaryMask patch_mask(int height, int width, int patch, double ratio, std::uint64_t seed);

BinaryMask freeform_mask(int height, int width, const FreeformParams& params, std::uint64_t seed);

// Pixels within distance thickness/2 of the segment (pixel centers at
// integer coordinates) are set. Returns the number of newly set pixels.
std::size_t draw_capsule(BinaryMask& mask, double y0, double x0, double y1, double x1, double thickness);

// Patch bit = 1 iff at least half of its pixels are masked.
PatchMask to_patch_mask(const BinaryMask& mask, int patch);

struct MaskSpec {
  MaskType type = MaskType::Freeform;
  double ratio = 0.6;
  int patch = 32;
  FreeformParams freeform;
};

BinaryMask generate_mask(int height, int width, const MaskSpec& spec, std::uint64_t seed);

}  // namespace terraseg
