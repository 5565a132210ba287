#include "mam/core/compositing.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam {

namespace {

void require_extent(const ImageRGB& ref, int w, int h, const char* what) {
  if (ref.width != w || ref.height != h) {
    throw ShapeError(fmt::format("composite: {} is {}x{}, expected {}x{}", what, w, h, ref.width,
                                 ref.height));
  }
}

}  // namespace

ImageRGB composite(const ImageRGB& fg, const ImageRGB& bg, const AlphaMatte& alpha) {
  require_extent(fg, bg.width, bg.height, "background");
  require_extent(fg, alpha.width, alpha.height, "alpha");
  ImageRGB out(fg.width, fg.height);
  const std::size_t n = fg.plane_size();
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = alpha.data[i];
      const std::size_t k = c * n + i;
      out.data[k] = std::clamp(a * fg.data[k] + (1.0 - a) * bg.data[k], 0.0, 1.0);
    }
  }
  return out;
}

ImageRGB composite_multi(const std::vector<ImageRGB>& fgs, const std::vector<AlphaMatte>& alphas,
                         const ImageRGB& bg) {
  if (fgs.size() != alphas.size()) {
    throw ShapeError(fmt::format("composite_multi: {} foregrounds but {} alphas", fgs.size(),
                                 alphas.size()));
  }
  for (std::size_t i = 0; i < fgs.size(); ++i) {
    require_extent(bg, fgs[i].width, fgs[i].height, "foreground");
    require_extent(bg, alphas[i].width, alphas[i].height, "alpha");
  }
  const std::size_t n = bg.plane_size();
  std::vector<double> total(n, 0.0);
  for (const auto& a : alphas)
    for (std::size_t i = 0; i < n; ++i) total[i] += a.data[i];
  const auto worst = std::max_element(total.begin(), total.end());
  if (worst != total.end() && *worst > 1.0 + 1e-6) {
    const auto idx = std::size_t(worst - total.begin());
    throw OverlapError(fmt::format("composite_multi: alphas sum to {} at pixel ({}, {})", *worst,
                                   idx % bg.width, idx / bg.width));
  }
  ImageRGB out(bg.width, bg.height);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = c * n + i;
      double v = 0.0;
      for (std::size_t j = 0; j < fgs.size(); ++j) v += alphas[j].data[i] * fgs[j].data[k];
      out.data[k] = std::clamp(v + (1.0 - total[i]) * bg.data[k], 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace mam
