#include "terraseg/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace terraseg {
namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("mask ratio must be in (0, 1)");
}

long round_half_up(double v) { return long(std::floor(v + 0.5)); }

}  // namespace

MaskType parse_mask_type(const std::string& name) {
  if (name == "rect" || name == "rectangular") return MaskType::Rectangular;
  if (name == "patch") return MaskType::Patch;
  if (name == "freeform" || name == "free-form") return MaskType::Freeform;
  throw InvalidInput("unknown mask type '" + name + "'");
}

std::string to_string(MaskType type) {
  switch (type) {
    case MaskType::Rectangular: return "rect";
    case MaskType::Patch: return "patch";
    case MaskType::Freeform: return "freeform";
  }
  return "?";
}

void FreeformParams::validate() const {
  check_ratio(ratio);
  if (strokes_min < 1 || strokes_max < strokes_min) throw InvalidInput("invalid free-form stroke range");
  if (segments_min < 1 || segments_max < segments_min) throw InvalidInput("invalid free-form segment range");
  if (!(length_min > 0.0) || length_max < length_min) throw InvalidInput("invalid free-form length range");
  if (!(thickness_min > 0.0) || thickness_max < thickness_min)
    throw InvalidInput("invalid free-form thickness range");
  if (max_strokes < 1) throw InvalidInput("free-form stroke cap must be positive");
}

std::size_t PatchMask::masked_count() const {
  return std::size_t(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BinaryMask rect_mask(int height, int width, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  BinaryMask mask(height, width);
  std::mt19937_64 rng(seed);
  const double area = double(round_half_up(ratio * height * width));
  const double aspect = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  int h = int(std::clamp(round_half_up(std::sqrt(area / aspect)), 1L, long(height)));
  int w = int(std::clamp(round_half_up(area / h), 1L, long(width)));
  if (w == width) h = int(std::clamp(round_half_up(area / w), 1L, long(height)));
  const int top = std::uniform_int_distribution<int>(0, height - h)(rng);
  const int left = std::uniform_int_distribution<int>(0, width - w)(rng);
  for (int y = top; y < top + h; ++y)
    for (int x = left; x < left + w; ++x) mask.at(y, x) = 1;
  return mask;
}

BinaryMask patch_mask(int height, int width, int patch, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  if (patch <= 0 || patch > height || patch > width) throw InvalidInput("patch size larger than image");
  const int rows = height / patch;
  const int cols = width / patch;
  const int n = rows * cols;
  const long count = std::min<long>(round_half_up(ratio * n), n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  BinaryMask mask(height, width);
  for (long i = 0; i < count; ++i) {
    const int py = order[i] / cols;
    const int px = order[i] % cols;
    for (int y = py * patch; y < (py + 1) * patch; ++y)
      for (int x = px * patch; x < (px + 1) * patch; ++x) mask.at(y, x) = 1;
  }
  return mask;
}

std::size_t draw_capsule(BinaryMask& mask, double y0, double x0, double y1, double x1, double thickness) {
  std::size_t added = 0;
  const double r = thickness / 2.0;
  const double r2 = r * r;
  const int ymin = std::max(0, int(std::floor(std::min(y0, y1) - r)));
  const int ymax = std::min(mask.height() - 1, int(std::ceil(std::max(y0, y1) + r)));
  const int xmin = std::max(0, int(std::floor(std::min(x0, x1) - r)));
  const int xmax = std::min(mask.width() - 1, int(std::ceil(std::max(x0, x1) + r)));
  const double dy = y1 - y0;
  const double dx = x1 - x0;
  const double len2 = dy * dy + dx * dx;
  for (int y = ymin; y <= ymax; ++y)
    for (int x = xmin; x <= xmax; ++x) {
      double t = len2 > 0.0 ? ((y - y0) * dy + (x - x0) * dx) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ey = y - (y0 + t * dy);
      const double ex = x - (x0 + t * dx);
      if (ey * ey + ex * ex <= r2 && !mask.at(y, x)) {
        mask.at(y, x) = 1;
        ++added;
      }
    }
  return added;
}

BinaryMask freeform_mask(int height, int width, const FreeformParams& params, std::uint64_t seed) {
  params.validate();
  BinaryMask mask(height, width);
  std::mt19937_64 rng(seed);
  const double side = std::min(height, width);
  const std::size_t target = std::size_t(std::ceil(params.ratio * double(height) * width));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  // Segments are laid down in ~1 px steps so generation stops right at the
  // first crossing of the target ratio.
  std::size_t masked = 0;
  int strokes = 0;
  while (strokes < params.max_strokes) {
    const int round = uniform_int(params.strokes_min, params.strokes_max);
    for (int s = 0; s < round && strokes < params.max_strokes; ++s, ++strokes) {
      const double thickness = std::max(1.0, uniform(params.thickness_min, params.thickness_max) * side);
      double y = uniform(0.0, height - 1);
      double x = uniform(0.0, width - 1);
      const int segments = uniform_int(params.segments_min, params.segments_max);
      for (int seg = 0; seg < segments; ++seg) {
        const double angle = uniform(0.0, 2.0 * std::numbers::pi);
        const double length = uniform(params.length_min, params.length_max) * side;
        const double ny = std::clamp(y + length * std::sin(angle), 0.0, double(height - 1));
        const double nx = std::clamp(x + length * std::cos(angle), 0.0, double(width - 1));
        const int steps = std::max(1, int(std::ceil(std::hypot(ny - y, nx - x))));
        for (int k = 0; k < steps; ++k) {
          const double a = double(k) / steps;
          const double b = double(k + 1) / steps;
          masked += draw_capsule(mask, y + a * (ny - y), x + a * (nx - x), y + b * (ny - y), x + b * (nx - x),
                                 thickness);
          if (masked >= target) return mask;
        }
        y = ny;
        x = nx;
      }
    }
  }
  throw GenerationFailure("free-form mask did not reach ratio " + std::to_string(params.ratio) + " within " +
                          std::to_string(params.max_strokes) + " strokes");
}

PatchMask to_patch_mask(const BinaryMask& mask, int patch) {
  if (patch <= 0) throw InvalidInput("patch size must be positive");
  PatchMask out;
  out.grid_height = (mask.height() + patch - 1) / patch;
  out.grid_width = (mask.width() + patch - 1) / patch;
  out.bits.assign(std::size_t(out.grid_height) * out.grid_width, 0);
  for (int gy = 0; gy < out.grid_height; ++gy)
    for (int gx = 0; gx < out.grid_width; ++gx) {
      const int y_end = std::min(mask.height(), (gy + 1) * patch);
      const int x_end = std::min(mask.width(), (gx + 1) * patch);
      std::size_t total = 0;
      std::size_t set = 0;
      for (int y = gy * patch; y < y_end; ++y)
        for (int x = gx * patch; x < x_end; ++x) {
          ++total;
          set += mask.at(y, x);
        }
      out.bits[std::size_t(gy) * out.grid_width + gx] = 2 * set >= total ? 1 : 0;
    }
  return out;
}

double default_ratio(MaskType type) {
  switch (type) {
    case MaskType::Rectangular: return 0.3;
    case MaskType::Patch: return 0.4;
    case MaskType::Freeform: return 0.6;
  }
  return 0.6;
}

BinaryMask generate_mask(int height, int width, const MaskSpec& spec, std::uint64_t seed) {
  switch (spec.type) {
    case MaskType::Rectangular: return rect_mask(height, width, spec.ratio, seed);
    case MaskType::Patch: return patch_mask(height, width, spec.patch, spec.ratio, seed);
    case MaskType::Freeform: {
      FreeformParams p = spec.freeform;
      p.ratio = spec.ratio;
      return freeform_mask(height, width, p, seed);
    }
  }
  throw InvalidInput("unknown mask type");
}

}  // namespace terraseg
