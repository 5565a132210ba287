#include "mam/train/sample.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mam/core/compositing.hpp"
#include "mam/core/morphology.hpp"
#include "mam/core/resize.hpp"
#include "mam/errors.hpp"

namespace mam::train {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

ImageRGB random_background_crop(const ImageRGB& bg, int crop, std::mt19937_64& rng) {
  const double cover = std::max(double(crop) / bg.width, double(crop) / bg.height);
  const double factor = cover * std::uniform_real_distribution<double>(1.0, 1.5)(rng);
  const int w = std::max(crop, int(std::ceil(bg.width * factor)));
  const int h = std::max(crop, int(std::ceil(bg.height * factor)));
  const auto scaled = resize_bilinear(bg, w, h);
  const int x0 = uniform_int(rng, 0, w - crop);
  const int y0 = uniform_int(rng, 0, h - crop);
  return mam::crop(scaled, Box{x0, y0, x0 + crop, y0 + crop});
}

}  // namespace

TrainingSample synthesize_sample(const InstanceRecord& instance, const ImageRGB& background, int crop,
                                 std::mt19937_64& rng, const SynthesisOptions& opt) {
  if (!instance.foreground.same_extent(instance.alpha)) {
    throw ShapeError(fmt::format("instance '{}': foreground and alpha extents differ", instance.source));
  }
  if (background.width < 1 || background.height < 1) throw ShapeError("synthesize_sample: empty background");
  if (!bounding_box(instance.alpha)) {
    throw ShapeError(fmt::format("instance '{}': alpha support is empty", instance.source));
  }

  double scale = std::uniform_real_distribution<double>(opt.scale_min, opt.scale_max)(rng);
  ImageRGB fg;
  AlphaMatte alpha;
  Box support;
  bool fits = false;
  for (int attempt = 0; attempt < opt.max_attempts && !fits; ++attempt, scale *= opt.shrink) {
    const int w = std::max(1, int(std::lround(instance.alpha.width * scale)));
    const int h = std::max(1, int(std::lround(instance.alpha.height * scale)));
    alpha = resize_bilinear(instance.alpha, w, h);
    for (auto& a : alpha.data) a = a < 1e-3 ? 0.0 : std::min(a, 1.0);
    const auto box = bounding_box(alpha);
    if (!box) continue;
    support = *box;
    fits = support.width() <= crop && support.height() <= crop;
    if (fits) fg = resize_bilinear(instance.foreground, w, h);
  }
  if (!fits) {
    throw ShapeError(fmt::format("instance '{}' does not fit a {}px crop after {} shrink attempts",
                                 instance.source, crop, opt.max_attempts));
  }

  const auto bg = random_background_crop(background, crop, rng);
  // Offset of the scaled instance frame inside the crop.
  const int ox = uniform_int(rng, -support.x0, crop - support.x1);
  const int oy = uniform_int(rng, -support.y0, crop - support.y1);
  ImageRGB placed_fg = bg;
  AlphaMatte placed_alpha(crop, crop);
  for (int y = std::max(0, oy); y < std::min(crop, oy + alpha.height); ++y) {
    for (int x = std::max(0, ox); x < std::min(crop, ox + alpha.width); ++x) {
      placed_alpha(x, y) = alpha(x - ox, y - oy);
      for (int c = 0; c < 3; ++c) placed_fg.at(c, x, y) = fg.at(c, x - ox, y - oy);
    }
  }

  TrainingSample sample;
  sample.image = composite(placed_fg, bg, placed_alpha);
  sample.box = *bounding_box(placed_alpha);
  guidance::OracleConfig oracle = opt.oracle;
  oracle.seed = rng();
  sample.mask = guidance::oracle_candidates({placed_alpha}, oracle).front().mask;
  sample.alpha = std::move(placed_alpha);
  return sample;
}

}  // namespace mam::train
