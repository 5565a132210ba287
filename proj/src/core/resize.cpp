#include "mam/core/resize.hpp"

#include <fmt/format.h>

#include "mam/errors.hpp"
#include "mam/kernels/separable.hpp"

namespace mam {

namespace {

void require_target(int width, int height, const char* op) {
  if (width < 1 || height < 1) {
    throw ConfigError(fmt::format("{}: target extent {}x{} is below 1", op, width, height));
  }
}

template <typename MapFn>
Plane resize_plane(const Plane& plane, int width, int height, MapFn map) {
  Plane out(width, height);
  kernels::separable_apply<double>(map(plane.height, height), map(plane.width, width), 1,
                                   plane.data, out.data);
  return out;
}

template <typename MapFn>
ImageRGB resize_image(const ImageRGB& image, int width, int height, MapFn map) {
  ImageRGB out(width, height);
  kernels::separable_apply<double>(map(image.height, height), map(image.width, width), 3,
                                   image.data, out.data);
  return out;
}

}  // namespace

Plane resize_bilinear(const Plane& plane, int width, int height) {
  require_target(width, height, "resize_bilinear");
  return resize_plane(plane, width, height, kernels::bilinear_map);
}

ImageRGB resize_bilinear(const ImageRGB& image, int width, int height) {
  require_target(width, height, "resize_bilinear");
  return resize_image(image, width, height, kernels::bilinear_map);
}

Plane resize_area(const Plane& plane, int width, int height) {
  require_target(width, height, "resize_area");
  return resize_plane(plane, width, height, kernels::area_map);
}

ImageRGB resize_area(const ImageRGB& image, int width, int height) {
  require_target(width, height, "resize_area");
  return resize_image(image, width, height, kernels::area_map);
}

BinaryMask resize_mask(const BinaryMask& mask, int width, int height) {
  Plane p(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) p.data[i] = mask.data[i] ? 1.0 : 0.0;
  const Plane r = resize_area(p, width, height);
  BinaryMask out(width, height);
  // Tolerance keeps exact half coverage at 1 despite rounding in the weights.
  for (std::size_t i = 0; i < r.size(); ++i) out.data[i] = r.data[i] >= 0.5 - 1e-9 ? 1 : 0;
  return out;
}

namespace {

void require_inside(const Box& box, int width, int height) {
  if (!box.valid_in(width, height)) {
    throw ShapeError(fmt::format("crop: box [{}, {}, {}, {}] outside {}x{}", box.x0, box.y0, box.x1,
                                 box.y1, width, height));
  }
}

template <typename V>
Grid<V> crop_grid(const Grid<V>& g, const Box& box) {
  require_inside(box, g.width, g.height);
  Grid<V> out(box.width(), box.height());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out(x, y) = g(box.x0 + x, box.y0 + y);
  return out;
}

}  // namespace

Plane crop(const Plane& plane, const Box& box) { return crop_grid(plane, box); }
BinaryMask crop(const BinaryMask& mask, const Box& box) { return crop_grid(mask, box); }

ImageRGB crop(const ImageRGB& image, const Box& box) {
  require_inside(box, image.width, image.height);
  ImageRGB out(box.width(), box.height());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) out.at(c, x, y) = image.at(c, box.x0 + x, box.y0 + y);
  return out;
}

}  // namespace mam
