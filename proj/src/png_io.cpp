#include "terraseg/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace terraseg {
namespace {

struct RawPng {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

RawPng read_raw(const std::filesystem::path& path, bool force_gray) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError(path.string() + ": " + image.message);
  const bool gray = force_gray || !(image.format & PNG_FORMAT_FLAG_COLOR);
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  RawPng raw;
  raw.height = int(image.height);
  raw.width = int(image.width);
  raw.channels = gray ? 1 : 3;
  raw.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path.string() + ": " + msg);
  }
  return raw;
}

void write_raw(const std::filesystem::path& path, int height, int width, int channels,
               const std::vector<std::uint8_t>& pixels) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(width);
  image.height = png_uint_32(height);
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels.data(), 0, nullptr))
    throw IoError(path.string() + ": " + image.message);
  std::vector<std::uint8_t> buffer(size);
  if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, pixels.data(), 0, nullptr))
    throw IoError(path.string() + ": " + image.message);
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

}  // namespace

ImageTensor read_image(const std::filesystem::path& path) {
  RawPng raw = read_raw(path, false);
  std::vector<float> data(raw.pixels.size());
  std::transform(raw.pixels.begin(), raw.pixels.end(), data.begin(),
                 [](std::uint8_t v) { return float(v) / 255.0f; });
  return ImageTensor(raw.height, raw.width, raw.channels, std::move(data));
}

void write_image(const std::filesystem::path& path, const ImageTensor& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw InvalidInput("PNG images must have 1 or 3 channels");
  std::vector<std::uint8_t> pixels(img.data().size());
  std::transform(img.data().begin(), img.data().end(), pixels.begin(), [](float v) {
    return std::uint8_t(std::lround(std::clamp(double(v), 0.0, 1.0) * 255.0));
  });
  write_raw(path, img.height(), img.width(), img.channels(), pixels);
}

SparseLabelMap read_labels(const std::filesystem::path& path, int num_categories) {
  RawPng raw = read_raw(path, true);
  std::vector<int> labels(raw.pixels.size());
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    const int v = raw.pixels[i];
    if (v == kUnlabeledByte) {
      labels[i] = kUnlabeled;
    } else if (v >= num_categories) {
      throw InvalidInput(path.string() + ": label value " + std::to_string(v) + " outside category table");
    } else {
      labels[i] = v;
    }
  }
  return SparseLabelMap(raw.height, raw.width, num_categories, std::move(labels));
}

void write_labels(const std::filesystem::path& path, const SparseLabelMap& labels) {
  labels.validate();
  if (labels.num_categories() > 255) throw InvalidInput("too many categories for 8-bit label file");
  std::vector<std::uint8_t> pixels(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    pixels[i] = labels[i] == kUnlabeled ? kUnlabeledByte : std::uint8_t(labels[i]);
  write_raw(path, labels.height(), labels.width(), 1, pixels);
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> pixels(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) pixels[i] = mask[i] ? 255 : 0;
  write_raw(path, mask.height(), mask.width(), 1, pixels);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  RawPng raw = read_raw(path, true);
  BinaryMask mask(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) mask.at(y, x) = raw.pixels[std::size_t(y) * raw.width + x] >= 128;
  return mask;
}

void write_gray8(const std::filesystem::path& path, int height, int width,
                 const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != std::size_t(height) * width) throw InvalidInput("gray8 buffer size mismatch");
  write_raw(path, height, width, 1, pixels);
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace terraseg
