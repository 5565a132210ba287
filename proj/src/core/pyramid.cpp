#include "mam/core/pyramid.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mam/errors.hpp"
#include "mam/kernels/separable.hpp"

namespace mam {

namespace {

Plane apply(const kernels::LinearMap1D& rows, const kernels::LinearMap1D& cols, const Plane& x) {
  Plane y(cols.out_size, rows.out_size);
  kernels::separable_apply<double>(rows, cols, 1, x.data, y.data);
  return y;
}

}  // namespace

int max_pyramid_levels(int width, int height, int cap) {
  int levels = 0;
  while (levels < cap && (width >> (levels + 1)) >= 1 && (height >> (levels + 1)) >= 1) ++levels;
  return levels;
}

Pyramid laplacian_pyramid(const Plane& plane, int levels) {
  if (levels < 1) throw ConfigError(fmt::format("laplacian_pyramid: levels must be >= 1, got {}", levels));
  const long need = 1L << levels;
  if (plane.width < need || plane.height < need) {
    throw ConfigError(fmt::format("laplacian_pyramid: {}x{} is too small for {} levels (needs {})",
                                  plane.width, plane.height, levels, need));
  }
  Pyramid p;
  Plane current = plane;
  for (int k = 0; k < levels; ++k) {
    const auto rows_down = kernels::pyr_down_map(current.height);
    const auto cols_down = kernels::pyr_down_map(current.width);
    Plane coarse = apply(rows_down, cols_down, current);
    Plane up = apply(kernels::pyr_up_map(coarse.height, current.height),
                     kernels::pyr_up_map(coarse.width, current.width), coarse);
    for (std::size_t i = 0; i < up.size(); ++i) up.data[i] = current.data[i] - up.data[i];
    p.levels.push_back(std::move(up));
    current = std::move(coarse);
  }
  p.base = std::move(current);
  return p;
}

Plane reconstruct(const Pyramid& pyramid) {
  Plane current = pyramid.base;
  for (auto it = pyramid.levels.rbegin(); it != pyramid.levels.rend(); ++it) {
    Plane up = apply(kernels::pyr_up_map(current.height, it->height),
                     kernels::pyr_up_map(current.width, it->width), current);
    for (std::size_t i = 0; i < up.size(); ++i) up.data[i] += it->data[i];
    current = std::move(up);
  }
  return current;
}

}  // namespace mam
