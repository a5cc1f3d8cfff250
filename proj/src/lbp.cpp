#include "terraseg/lbp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "terraseg/png_io.hpp"

namespace terraseg {
namespace {

struct Tap {
  double dy;
  double dx;
};

std::vector<Tap> circle_taps(const LbpConfig& cfg) {
  std::vector<Tap> taps(static_cast<std::size_t>(cfg.points));
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };
  for (int k = 0; k < cfg.points; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / cfg.points;
    taps[k] = {snap(-cfg.radius * std::sin(angle)), snap(cfg.radius * std::cos(angle))};
  }
  return taps;
}

// Interpolates v - offset. The lerp form keeps constant neighborhoods exact,
// and subtracting the center first makes codes exact under gray shifts.
double bilinear_clamped(const float* img, int height, int width, double sy, double sx, double offset = 0.0) {
  sy = std::clamp(sy, 0.0, double(height - 1));
  sx = std::clamp(sx, 0.0, double(width - 1));
  const int y0 = int(std::floor(sy));
  const int x0 = int(std::floor(sx));
  const int y1 = std::min(y0 + 1, height - 1);
  const int x1 = std::min(x0 + 1, width - 1);
  const double ty = sy - y0;
  const double tx = sx - x0;
  const double v00 = img[std::size_t(y0) * width + x0] - offset;
  const double v01 = img[std::size_t(y0) * width + x1] - offset;
  const double v10 = img[std::size_t(y1) * width + x0] - offset;
  const double v11 = img[std::size_t(y1) * width + x1] - offset;
  const double top = v00 + tx * (v01 - v00);
  const double bottom = v10 + tx * (v11 - v10);
  return top + ty * (bottom - top);
}

void check_gray(const ImageTensor& gray) {
  if (gray.channels() != 1)
    throw InvalidInput("LBP expects a 1-channel image, got " + std::to_string(gray.channels()) + " channels");
}

void check_size(const ImageTensor& gray, const LbpConfig& cfg) {
  const double min_side = 2.0 * cfg.radius + 1.0;
  if (gray.height() < min_side || gray.width() < min_side)
    throw InvalidInput("image smaller than 2R+1 in at least one dimension");
}

inline std::uint8_t code_at(const float* img, int h, int w, int y, int x, const std::vector<Tap>& taps) {
  const double center = img[std::size_t(y) * w + x];
  std::uint64_t bits = 0;
  for (std::size_t k = 0; k < taps.size(); ++k)
    if (bilinear_clamped(img, h, w, y + taps[k].dy, x + taps[k].dx, center) >= 0.0) bits |= std::uint64_t{1} << k;
  return std::uint8_t(riu2_code(bits, int(taps.size())));
}

void check_patch(int patch) {
  if (patch <= 0) throw InvalidInput("histogram patch size must be positive");
}

void normalize_patches(LbpHistogramMap& hist) {
  for (int gy = 0; gy < hist.grid_height; ++gy)
    for (int gx = 0; gx < hist.grid_width; ++gx) {
      double* h = hist.patch(gy, gx);
      double norm2 = 0.0;
      for (int b = 0; b < hist.bins; ++b) norm2 += h[b] * h[b];
      if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (int b = 0; b < hist.bins; ++b) h[b] *= inv;
      }
    }
}

LbpHistogramMap empty_histograms(const LbpCodeMap& codes, int patch) {
  LbpHistogramMap hist;
  hist.grid_height = (codes.height + patch - 1) / patch;
  hist.grid_width = (codes.width + patch - 1) / patch;
  hist.bins = codes.points + 2;
  hist.values.assign(hist.patch_count() * hist.bins, 0.0);
  return hist;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

}  // namespace

void LbpConfig::validate() const {
  if (points < 4 || points > 64) throw InvalidInput("LBP neighbor count P must be in [4, 64]");
  if (!(radius >= 1.0)) throw InvalidInput("LBP radius R must be >= 1");
}

std::vector<double> sample_neighbors(const ImageTensor& gray, int y, int x, const LbpConfig& cfg) {
  check_gray(gray);
  cfg.validate();
  if (y < 0 || y >= gray.height() || x < 0 || x >= gray.width()) throw InvalidInput("pixel outside image");
  std::vector<double> out;
  out.reserve(std::size_t(cfg.points));
  for (const Tap& t : circle_taps(cfg))
    out.push_back(bilinear_clamped(gray.data().data(), gray.height(), gray.width(), y + t.dy, x + t.dx));
  return out;
}

int uniformity(std::uint64_t bits, int points) {
  const std::uint64_t mask = points >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << points) - 1;
  bits &= mask;
  const std::uint64_t rotated = ((bits >> 1) | (bits << (points - 1))) & mask;
  return std::popcount(bits ^ rotated);
}

int riu2_code(std::uint64_t bits, int points) {
  const std::uint64_t mask = points >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << points) - 1;
  return uniformity(bits, points) <= 2 ? std::popcount(bits & mask) : points + 1;
}

LbpCodeMap lbp_map(const ImageTensor& gray, const LbpConfig& cfg) {
  check_gray(gray);
  cfg.validate();
  check_size(gray, cfg);
  const auto taps = circle_taps(cfg);
  const int h = gray.height();
  const int w = gray.width();
  LbpCodeMap out{h, w, cfg.points, std::vector<std::uint8_t>(std::size_t(h) * w)};
  const float* img = gray.data().data();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.codes[std::size_t(y) * w + x] = code_at(img, h, w, y, x, taps);
  return out;
}

LbpCodeMap lbp_map_serial(const ImageTensor& gray, const LbpConfig& cfg) {
  check_gray(gray);
  cfg.validate();
  check_size(gray, cfg);
  const int h = gray.height();
  const int w = gray.width();
  LbpCodeMap out{h, w, cfg.points, std::vector<std::uint8_t>(std::size_t(h) * w)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto samples = sample_neighbors(gray, y, x, cfg);
      const double center = gray.at(y, x);
      std::uint64_t bits = 0;
      for (int k = 0; k < cfg.points; ++k)
        if (samples[k] >= center) bits |= std::uint64_t{1} << k;
      out.codes[std::size_t(y) * w + x] = std::uint8_t(riu2_code(bits, cfg.points));
    }
  return out;
}

LbpHistogramMap lbp_histograms(const LbpCodeMap& codes, int patch) {
  check_patch(patch);
  LbpHistogramMap hist = empty_histograms(codes, patch);
  const int cells = int(hist.patch_count());
#pragma omp parallel for schedule(static)
  for (int cell = 0; cell < cells; ++cell) {
    const int gy = cell / hist.grid_width;
    const int gx = cell % hist.grid_width;
    double* h = hist.patch(gy, gx);
    const int y_end = std::min(codes.height, (gy + 1) * patch);
    const int x_end = std::min(codes.width, (gx + 1) * patch);
    for (int y = gy * patch; y < y_end; ++y)
      for (int x = gx * patch; x < x_end; ++x) h[codes.at(y, x)] += 1.0;
  }
  normalize_patches(hist);
  return hist;
}

LbpHistogramMap lbp_histograms_serial(const LbpCodeMap& codes, int patch) {
  check_patch(patch);
  LbpHistogramMap hist = empty_histograms(codes, patch);
  for (int y = 0; y < codes.height; ++y)
    for (int x = 0; x < codes.width; ++x) hist.patch(y / patch, x / patch)[codes.at(y, x)] += 1.0;
  normalize_patches(hist);
  return hist;
}

LbpHistogramMap lbp_target(const ImageTensor& img, const LbpConfig& cfg, int patch) {
  return lbp_histograms(lbp_map(to_grayscale(img), cfg), patch);
}

void write_histogram_file(const std::filesystem::path& path, const LbpHistogramMap& hist) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(12 + hist.values.size() * 4);
  put_u32(bytes, std::uint32_t(hist.grid_height));
  put_u32(bytes, std::uint32_t(hist.grid_width));
  put_u32(bytes, std::uint32_t(hist.bins));
  for (double v : hist.values) put_u32(bytes, std::bit_cast<std::uint32_t>(float(v)));
  write_file_atomic(path, bytes);
}

LbpHistogramMap read_histogram_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12) throw IoError(path.string() + ": truncated header");
  LbpHistogramMap hist;
  hist.grid_height = int(get_u32(bytes.data()));
  hist.grid_width = int(get_u32(bytes.data() + 4));
  hist.bins = int(get_u32(bytes.data() + 8));
  const std::size_t n = std::size_t(hist.grid_height) * hist.grid_width * hist.bins;
  if (bytes.size() != 12 + 4 * n) throw IoError(path.string() + ": size does not match header");
  hist.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) hist.values[i] = std::bit_cast<float>(get_u32(bytes.data() + 12 + 4 * i));
  return hist;
}

std::vector<std::uint8_t> code_map_preview(const LbpCodeMap& codes) {
  std::vector<std::uint8_t> out(codes.codes.size());
  const int top = codes.points + 1;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::uint8_t((codes.codes[i] * 255 + top / 2) / top);
  return out;
}

}  // namespace terraseg
