#include "terraseg/image.hpp"

#include <algorithm>
#include <cmath>

namespace terraseg {

ImageTensor::ImageTensor(int height, int width, int channels)
    : ImageTensor(height, width, channels,
                  std::vector<float>(std::size_t(std::max(height, 0)) * std::max(width, 0) *
                                     std::max(channels, 0))) {}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw InvalidInput("image dimensions must be positive");
  if (data_.size() != std::size_t(height) * width * channels)
    throw InvalidInput("image data length does not match height*width*channels");
}

SparseLabelMap::SparseLabelMap(int height, int width, int num_categories, int fill)
    : SparseLabelMap(height, width, num_categories,
                     std::vector<int>(std::size_t(std::max(height, 0)) * std::max(width, 0), fill)) {}

SparseLabelMap::SparseLabelMap(int height, int width, int num_categories, std::vector<int> labels)
    : height_(height), width_(width), num_categories_(num_categories), labels_(std::move(labels)) {
  if (height <= 0 || width <= 0) throw InvalidInput("label map dimensions must be positive");
  if (num_categories <= 0) throw InvalidInput("label map needs at least one category");
  if (labels_.size() != std::size_t(height) * width)
    throw InvalidInput("label data length does not match height*width");
}

std::size_t SparseLabelMap::labeled_count() const {
  return std::size_t(std::count_if(labels_.begin(), labels_.end(), [](int v) { return v != kUnlabeled; }));
}

void SparseLabelMap::validate() const {
  for (int v : labels_)
    if (v != kUnlabeled && (v < 0 || v >= num_categories_))
      throw InvalidInput("label " + std::to_string(v) + " outside [0, " + std::to_string(num_categories_) + ")");
}

BinaryMask::BinaryMask(int height, int width, std::uint8_t fill)
    : height_(height), width_(width), bits_(std::size_t(std::max(height, 0)) * std::max(width, 0), fill ? 1 : 0) {
  if (height <= 0 || width <= 0) throw InvalidInput("mask dimensions must be positive");
}

std::size_t BinaryMask::masked_count() const {
  return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double BinaryMask::ratio() const { return bits_.empty() ? 0.0 : double(masked_count()) / double(bits_.size()); }

int CategoryTable::id_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : int(it - names.begin());
}

CategoryTable CategoryTable::terrain() {
  return {{"sky", "ridge", "soil", "sand", "bedrock", "rock", "rover", "trace", "hole"}};
}

CategoryTable CategoryTable::numbered(int count) {
  CategoryTable t;
  for (int i = 0; i < count; ++i) t.names.push_back("c" + std::to_string(i));
  return t;
}

ImageTensor to_grayscale(const ImageTensor& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3)
    throw InvalidInput("to_grayscale expects 1 or 3 channels, got " + std::to_string(img.channels()));
  ImageTensor out(img.height(), img.width(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double v = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    dst[i] = float(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

ImageTensor apply_mask(const ImageTensor& img, const BinaryMask& mask) {
  if (img.height() != mask.height() || img.width() != mask.width())
    throw InvalidInput("mask shape does not match image");
  ImageTensor out = img;
  auto dst = out.data();
  const int c = img.channels();
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    if (mask[i])
      for (int k = 0; k < c; ++k) dst[i * c + k] = 0.0f;
  return out;
}

void validate_unit_range(const ImageTensor& img) {
  for (float v : img.data())
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) throw InvalidInput("image value outside [0,1]");
}

}  // namespace terraseg
