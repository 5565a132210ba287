#include "mam/core/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam {

namespace {

struct ReadCursor {
  const Bytes* bytes;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + n > cur->bytes->size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, cur->bytes->data() + cur->offset, n);
  cur->offset += n;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_noop(png_structp) {}

void warn_silently(png_structp, png_const_charp) {}

// Records the libpng message, then unwinds to the caller's setjmp.
void record_error(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<char*>(png_get_error_ptr(png));
  std::snprintf(buf, 256, "corrupt PNG data: %s", msg);
  png_longjmp(png, 1);
}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  double max_value = 255.0;
  std::vector<std::uint16_t> samples;  // interleaved
};

// Pulls the image out through libpng; `rgb` selects the output layout
// (3 channels) or luma (1 channel).
Decoded decode(const Bytes& bytes, bool rgb) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw CorruptionError("not a PNG stream (bad signature)");
  }
  char message[256] = "corrupt PNG data";
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, message, record_error, warn_silently);
  if (png == nullptr) throw ResourceError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{&bytes, 0};
  Decoded out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw CorruptionError(message);
  }
  png_set_read_fn(png, &cursor, read_from_memory);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if ((color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const bool is_color = (color & PNG_COLOR_MASK_COLOR) != 0 || color == PNG_COLOR_TYPE_PALETTE;
  if (rgb && !is_color) png_set_gray_to_rgb(png);
  if (!rgb && is_color) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  out.width = int(png_get_image_width(png, info));
  out.height = int(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * std::size_t(out.height));
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.max_value = out_depth == 16 ? 65535.0 : 255.0;
  const std::size_t count = std::size_t(out.width) * out.height * out.channels;
  out.samples.resize(count);
  for (int y = 0; y < out.height; ++y) {
    const png_byte* row = rows[y];
    const std::size_t base = std::size_t(y) * out.width * out.channels;
    for (std::size_t i = 0; i < std::size_t(out.width) * out.channels; ++i) {
      out.samples[base + i] =
          out_depth == 16 ? std::uint16_t((row[2 * i] << 8) | row[2 * i + 1]) : row[i];
    }
  }
  return out;
}

Bytes encode(int width, int height, int channels, int depth, const std::vector<std::uint16_t>& samples) {
  if (width < 1 || height < 1) throw ShapeError(fmt::format("cannot encode a {}x{} PNG", width, height));
  char message[256] = "PNG encoding failed";
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, message, record_error, warn_silently);
  if (png == nullptr) throw ResourceError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  Bytes out;
  const std::size_t bps = depth == 16 ? 2 : 1;
  const std::size_t row_bytes = std::size_t(width) * channels * bps;
  std::vector<png_byte> buffer(row_bytes * height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (depth == 16) {
      buffer[2 * i] = png_byte(samples[i] >> 8);
      buffer[2 * i + 1] = png_byte(samples[i] & 0xff);
    } else {
      buffer[i] = png_byte(samples[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + row_bytes * y;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(message);
  }
  png_set_write_fn(png, &out, write_to_memory, flush_noop);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::uint16_t quantize(double v, double max_value) {
  return std::uint16_t(std::lround(std::clamp(v, 0.0, 1.0) * max_value));
}

}  // namespace

ImageRGB decode_png_rgb(const Bytes& png) {
  const Decoded d = decode(png, true);
  ImageRGB img(d.width, d.height);
  const std::size_t n = img.plane_size();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) img.data[c * n + i] = d.samples[i * 3 + c] / d.max_value;
  return img;
}

ImageRGB read_png_rgb(const std::filesystem::path& path) { return decode_png_rgb(read_file(path)); }

Bytes encode_png_rgb(const ImageRGB& image) {
  const std::size_t n = image.plane_size();
  std::vector<std::uint16_t> samples(n * 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) samples[i * 3 + c] = quantize(image.data[c * n + i], 255.0);
  return encode(image.width, image.height, 3, 8, samples);
}

void write_png_rgb(const std::filesystem::path& path, const ImageRGB& image) {
  write_file(path, encode_png_rgb(image));
}

AlphaMatte decode_png_gray(const Bytes& png) {
  const Decoded d = decode(png, false);
  AlphaMatte a(d.width, d.height);
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] = d.samples[i] / d.max_value;
  return a;
}

AlphaMatte read_png_gray(const std::filesystem::path& path) { return decode_png_gray(read_file(path)); }

Bytes encode_png_gray(const AlphaMatte& plane, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw ConfigError(fmt::format("gray PNG bit depth must be 8 or 16, got {}", bit_depth));
  }
  const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint16_t> samples(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) samples[i] = quantize(plane.data[i], max_value);
  return encode(plane.width, plane.height, 1, bit_depth, samples);
}

void write_png_gray(const std::filesystem::path& path, const AlphaMatte& plane, int bit_depth) {
  write_file(path, encode_png_gray(plane, bit_depth));
}

BinaryMask read_png_mask(const std::filesystem::path& path, double threshold) {
  const AlphaMatte a = read_png_gray(path);
  BinaryMask m(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) m.data[i] = a.data[i] >= threshold ? 1 : 0;
  return m;
}

Bytes encode_png_mask(const BinaryMask& mask) {
  std::vector<std::uint16_t> samples(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) samples[i] = mask.data[i] ? 255 : 0;
  return encode(mask.width, mask.height, 1, 8, samples);
}

void write_png_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  write_file(path, encode_png_mask(mask));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

namespace {

void write_raw(const std::filesystem::path& path, const char* data, std::size_t n) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(data, std::streamsize(n));
  if (!out) throw IoError(fmt::format("short write to '{}'", path.string()));
}

}  // namespace

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  write_raw(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_raw(path, text.data(), text.size());
}

}  // namespace mam
