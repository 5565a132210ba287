#include "mam/core/image.hpp"

#include <algorithm>

#include "mam/errors.hpp"

namespace mam {

Plane ImageRGB::channel(int c) const {
  Plane p(width, height);
  const auto begin = data.begin() + std::ptrdiff_t(c) * std::ptrdiff_t(plane_size());
  std::copy(begin, begin + std::ptrdiff_t(plane_size()), p.data.begin());
  return p;
}

void ImageRGB::set_channel(int c, const Plane& p) {
  if (!same_extent(p)) throw ShapeError("ImageRGB::set_channel: extent mismatch");
  std::copy(p.data.begin(), p.data.end(), data.begin() + std::ptrdiff_t(c) * std::ptrdiff_t(plane_size()));
}

}  // namespace mam
