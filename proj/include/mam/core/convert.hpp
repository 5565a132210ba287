#pragma once

#include <vector>

#include "mam/ad/tensor.hpp"
#include "mam/core/image.hpp"
#include "mam/errors.hpp"

namespace mam {

/// N×3×H×W from equally sized images.
template <typename T>
ad::Tensor<T> stack_images(const std::vector<const ImageRGB*>& images) {
  if (images.empty()) throw ContractError("stack_images: no images");
  const int w = images.front()->width;
  const int h = images.front()->height;
  std::vector<T> values;
  values.reserve(images.size() * 3 * std::size_t(w) * h);
  for (const auto* img : images) {
    if (img->width != w || img->height != h) throw ShapeError("stack_images: extents differ");
    for (double v : img->data) values.push_back(T(v));
  }
  return ad::Tensor<T>({int(images.size()), 3, h, w}, std::move(values));
}

/// N×1×H×W from equally sized planes (masks convert to 0/1).
template <typename T, typename V>
ad::Tensor<T> stack_planes(const std::vector<const Grid<V>*>& planes) {
  if (planes.empty()) throw ContractError("stack_planes: no planes");
  const int w = planes.front()->width;
  const int h = planes.front()->height;
  std::vector<T> values;
  values.reserve(planes.size() * std::size_t(w) * h);
  for (const auto* p : planes) {
    if (p->width != w || p->height != h) throw ShapeError("stack_planes: extents differ");
    for (V v : p->data) values.push_back(T(v));
  }
  return ad::Tensor<T>({int(planes.size()), 1, h, w}, std::move(values));
}

/// Plane (n, c) of an N×C×H×W tensor.
template <typename T>
Plane plane_of(const ad::Tensor<T>& t, int n, int c = 0) {
  const auto& s = t.shape();
  if (s.size() != 4) throw ShapeError("plane_of: expected a rank-4 tensor");
  Plane p(s[3], s[2]);
  const std::size_t offset = (std::size_t(n) * s[1] + c) * p.size();
  for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = double(t.at(offset + i));
  return p;
}

}  // namespace mam
