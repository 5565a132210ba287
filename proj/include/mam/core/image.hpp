#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mam {

/// Row-major single-channel raster, origin top-left.
template <typename V>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<V> data;

  Grid() = default;
  Grid(int w, int h, V fill = V{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}

  [[nodiscard]] V& operator()(int x, int y) { return data[std::size_t(y) * width + x]; }
  [[nodiscard]] const V& operator()(int x, int y) const { return data[std::size_t(y) * width + x]; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] bool empty() const { return data.empty(); }
  template <typename U>
  [[nodiscard]] bool same_extent(const Grid<U>& o) const {
    return width == o.width && height == o.height;
  }
  [[nodiscard]] bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  bool operator==(const Grid&) const = default;
};

// α, and any other real-valued per-pixel plane (weight maps, errors).
using AlphaMatte = Grid<double>;
using Plane = Grid<double>;
// Strictly 0/1.
using BinaryMask = Grid<std::uint8_t>;

/// Planar RGB, values in [0,1]: data holds R, then G, then B, each H×W.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ImageRGB() = default;
  ImageRGB(int w, int h, double fill = 0.0) : width(w), height(h), data(std::size_t(3) * w * h, fill) {}

  [[nodiscard]] double& at(int c, int x, int y) {
    return data[(std::size_t(c) * height + y) * width + x];
  }
  [[nodiscard]] double at(int c, int x, int y) const {
    return data[(std::size_t(c) * height + y) * width + x];
  }
  [[nodiscard]] std::size_t plane_size() const { return std::size_t(width) * height; }
  [[nodiscard]] Plane channel(int c) const;
  void set_channel(int c, const Plane& p);
  template <typename V>
  [[nodiscard]] bool same_extent(const Grid<V>& g) const {
    return width == g.width && height == g.height;
  }
  [[nodiscard]] bool same_extent(const ImageRGB& o) const {
    return width == o.width && height == o.height;
  }
  bool operator==(const ImageRGB&) const = default;
};

/// Half-open pixel rectangle [x0, x1) × [y0, y1).
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  [[nodiscard]] int width() const { return x1 - x0; }
  [[nodiscard]] int height() const { return y1 - y0; }
  [[nodiscard]] long area() const { return long(width()) * height(); }
  [[nodiscard]] bool valid_in(int w, int h) const {
    return 0 <= x0 && x0 < x1 && x1 <= w && 0 <= y0 && y0 < y1 && y1 <= h;
  }
  bool operator==(const Box&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

}  // namespace mam
