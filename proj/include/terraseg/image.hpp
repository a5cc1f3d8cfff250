#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "terraseg/error.hpp"

namespace terraseg {

inline constexpr int kUnlabeled = -1;
// Value used for unlabeled pixels in single-byte label files.
inline constexpr std::uint8_t kUnlabeledByte = 255;

// Interleaved (HWC, row-major) image with values in [0,1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels);
  ImageTensor(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return std::size_t(height_) * width_; }

  float& at(int y, int x, int c = 0) { return data_[(std::size_t(y) * width_ + x) * channels_ + c]; }
  float at(int y, int x, int c = 0) const { return data_[(std::size_t(y) * width_ + x) * channels_ + c]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Per-pixel category ids in {-1, 0, ..., C-1}; -1 marks an unlabeled pixel.
class SparseLabelMap {
 public:
  SparseLabelMap() = default;
  SparseLabelMap(int height, int width, int num_categories, int fill = kUnlabeled);
  SparseLabelMap(int height, int width, int num_categories, std::vector<int> labels);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_categories() const { return num_categories_; }
  std::size_t size() const { return labels_.size(); }

  int& at(int y, int x) { return labels_[std::size_t(y) * width_ + x]; }
  int at(int y, int x) const { return labels_[std::size_t(y) * width_ + x]; }
  int operator[](std::size_t i) const { return labels_[i]; }
  int& operator[](std::size_t i) { return labels_[i]; }

  std::span<const int> labels() const { return labels_; }
  std::size_t labeled_count() const;

  // Throws InvalidInput if any entry is outside {-1, 0, ..., C-1}.
  void validate() const;

  bool operator==(const SparseLabelMap&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int num_categories_ = 0;
  std::vector<int> labels_;
};

// H x W map with 1 = masked (invalid) pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, std::uint8_t fill = 0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  std::uint8_t& at(int y, int x) { return bits_[std::size_t(y) * width_ + x]; }
  std::uint8_t at(int y, int x) const { return bits_[std::size_t(y) * width_ + x]; }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t masked_count() const;
  double ratio() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct CategoryTable {
  std::vector<std::string> names;

  int size() const { return int(names.size()); }
  int id_of(const std::string& name) const;  // -1 when absent

  // sky, ridge, soil, sand, bedrock, rock, rover, trace, hole
  static CategoryTable terrain();
  // "c0", "c1", ... for synthetic data
  static CategoryTable numbered(int count);
};

// ITU-R 601 luma. 1-channel input is returned unchanged.
ImageTensor to_grayscale(const ImageTensor& img);

// x * (1 - M), broadcast over channels.
ImageTensor apply_mask(const ImageTensor& img, const BinaryMask& mask);

// Throws InvalidInput if any value is non-finite or outside [0,1].
void validate_unit_range(const ImageTensor& img);

}  // namespace terraseg
