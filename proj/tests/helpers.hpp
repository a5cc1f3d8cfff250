#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "terraseg/image.hpp"
#include "terraseg/tensor.hpp"

namespace terraseg::testutil {

inline ImageTensor random_image(int h, int w, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageTensor img(h, w, c);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

// k / 1024 values: shifts and scales by dyadic constants stay exact in float.
inline ImageTensor dyadic_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 511);
  ImageTensor img(h, w, 1);
  for (auto& v : img.data()) v = float(u(rng)) / 1024.0f;
  return img;
}

inline Tensor<double> random_tensor(int c, int h, int w, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(c, h, w);
  for (auto& v : t.data) v = u(rng);
  return t;
}

inline SparseLabelMap random_labels(int h, int w, int categories, double unlabeled, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, categories - 1);
  SparseLabelMap labels(h, w, categories);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = u(rng) < unlabeled ? kUnlabeled : pick(rng);
  return labels;
}

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("terraseg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace terraseg::testutil
