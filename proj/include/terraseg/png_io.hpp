#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "terraseg/image.hpp"

namespace terraseg {

// 8-bit PNG, 1 or 3 channels (alpha is dropped), values divided by 255.
ImageTensor read_image(const std::filesystem::path& path);
// Values are clamped to [0,1] and rounded to the nearest 8-bit level.
void write_image(const std::filesystem::path& path, const ImageTensor& img);

// Single-channel 8-bit PNG; 255 = unlabeled, other values must be < num_categories.
SparseLabelMap read_labels(const std::filesystem::path& path, int num_categories);
void write_labels(const std::filesystem::path& path, const SparseLabelMap& labels);

// 0/255 mask PNG.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);

void write_gray8(const std::filesystem::path& path, int height, int width,
                 const std::vector<std::uint8_t>& pixels);

// Writes `bytes` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace terraseg
