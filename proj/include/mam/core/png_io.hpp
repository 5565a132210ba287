#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mam/core/image.hpp"

namespace mam {

using Bytes = std::vector<std::uint8_t>;

// Any PNG colour type is accepted on read: palette and gray expand to RGB,
// alpha channels are dropped, 16-bit samples scale to [0,1].
ImageRGB decode_png_rgb(const Bytes& png);
ImageRGB read_png_rgb(const std::filesystem::path& path);
Bytes encode_png_rgb(const ImageRGB& image);
void write_png_rgb(const std::filesystem::path& path, const ImageRGB& image);

// Single-channel planes: 8- or 16-bit gray (value / (2^bits − 1)). Colour
// inputs are reduced to luma.
AlphaMatte decode_png_gray(const Bytes& png);
AlphaMatte read_png_gray(const std::filesystem::path& path);
Bytes encode_png_gray(const AlphaMatte& plane, int bit_depth = 16);
void write_png_gray(const std::filesystem::path& path, const AlphaMatte& plane, int bit_depth = 16);

BinaryMask read_png_mask(const std::filesystem::path& path, double threshold = 0.5);
Bytes encode_png_mask(const BinaryMask& mask);
void write_png_mask(const std::filesystem::path& path, const BinaryMask& mask);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mam
