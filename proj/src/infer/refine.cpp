#include "mam/infer/refine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mam/core/morphology.hpp"
#include "mam/core/resize.hpp"
#include "mam/errors.hpp"

namespace mam::infer {

namespace {

int scaled_radius(int at_1024, int target) { return int(std::lround(at_1024 * double(target) / 1024.0)); }

}  // namespace

MergePolicy MergePolicy::for_target(int target, MergeBase base) {
  return MergePolicy{base, scaled_radius(30, target), scaled_radius(15, target), 0.5};
}

MergePolicy InferenceConfig::policy() const {
  auto p = MergePolicy::for_target(target, base);
  if (r4) p.r4 = *r4;
  if (r1) p.r1 = *r1;
  return p;
}

void InferenceConfig::validate() const {
  if (target < 16 || target % 16 != 0) {
    throw ConfigError(fmt::format("inference target must be a positive multiple of 16, got {}", target));
  }
  if ((r4 && *r4 < 0) || (r1 && *r1 < 0)) throw ConfigError("merge radii must be >= 0");
}

Box Transform::to_target(const Box& b) const {
  return Box{int(std::lround(b.x0 * sx())), int(std::lround(b.y0 * sy())), int(std::lround(b.x1 * sx())),
             int(std::lround(b.y1 * sy()))};
}

Box Transform::to_source(const Box& b) const {
  return Box{int(std::lround(b.x0 / sx())), int(std::lround(b.y0 / sy())), int(std::lround(b.x1 / sx())),
             int(std::lround(b.y1 / sy()))};
}

Preprocessed preprocess(const ImageRGB& image, int target) {
  if (image.width < 1 || image.height < 1) throw ShapeError("preprocess: empty image");
  if (target < 1) throw ConfigError(fmt::format("preprocess: target must be positive, got {}", target));
  Transform t;
  t.src_w = image.width;
  t.src_h = image.height;
  t.target = target;
  const double s = double(target) / std::max(image.width, image.height);
  t.scaled_w = image.width >= image.height ? target : std::clamp(int(std::lround(image.width * s)), 1, target);
  t.scaled_h = image.height >= image.width ? target : std::clamp(int(std::lround(image.height * s)), 1, target);

  const auto scaled = (t.scaled_w == image.width && t.scaled_h == image.height)
                          ? image
                          : resize_bilinear(image, t.scaled_w, t.scaled_h);
  ImageRGB padded(target, target, 0.0);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < t.scaled_h; ++y)
      for (int x = 0; x < t.scaled_w; ++x) padded.at(c, x, y) = scaled.at(c, x, y);
  return Preprocessed{std::move(padded), t};
}

BinaryMask preprocess_mask(const BinaryMask& mask, const Transform& t) {
  if (mask.width != t.src_w || mask.height != t.src_h) {
    throw ShapeError(fmt::format("preprocess_mask: mask is {}x{}, source is {}x{}", mask.width, mask.height,
                                 t.src_w, t.src_h));
  }
  const auto scaled =
      (t.scaled_w == mask.width && t.scaled_h == mask.height) ? mask : resize_mask(mask, t.scaled_w, t.scaled_h);
  BinaryMask padded(t.target, t.target);
  for (int y = 0; y < t.scaled_h; ++y)
    for (int x = 0; x < t.scaled_w; ++x) padded(x, y) = scaled(x, y);
  return padded;
}

AlphaMatte restore(const AlphaMatte& matte, const Transform& t) {
  if (matte.width != t.target || matte.height != t.target) {
    throw ShapeError(fmt::format("restore: matte is {}x{}, expected {}x{}", matte.width, matte.height, t.target,
                                 t.target));
  }
  const auto cropped = crop(matte, Box{0, 0, t.scaled_w, t.scaled_h});
  if (t.scaled_w == t.src_w && t.scaled_h == t.src_h) return cropped;
  auto out = resize_bilinear(cropped, t.src_w, t.src_h);
  for (auto& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

AlphaMatte merge_base(const MergePolicy& policy, const BinaryMask& mask, const m2m::MultiScalePrediction& preds) {
  if (policy.base == MergeBase::FromMask) return to_alpha(mask);
  return resize_bilinear(preds.os8, mask.width, mask.height);
}

AlphaMatte merge_multiscale(const AlphaMatte& base, const m2m::MultiScalePrediction& preds,
                            const MergePolicy& policy) {
  if (policy.r4 < 0 || policy.r1 < 0) throw ConfigError("merge radii must be >= 0");
  if (!preds.os1.same_extent(base)) {
    throw ShapeError(fmt::format("merge: os1 is {}x{}, base is {}x{}", preds.os1.width, preds.os1.height,
                                 base.width, base.height));
  }
  if (preds.os4.empty() || preds.os8.empty()) throw ShapeError("merge: empty os4/os8 prediction");
  const auto up4 = resize_bilinear(preds.os4, base.width, base.height);
  const auto r4 = dilate(binarize(base, policy.threshold), policy.r4);
  const auto r1 = transition_band(up4, policy.r1, kBandLow, kBandHigh);
  AlphaMatte out = base;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (r4.data[i]) out.data[i] = up4.data[i];
    if (r1.data[i]) out.data[i] = preds.os1.data[i];
    out.data[i] = std::clamp(out.data[i], 0.0, 1.0);
  }
  return out;
}

m2m::MultiScalePrediction NetworkRefiner::refine(const ImageRGB& image, const BinaryMask& mask,
                                                 const guidance::FeatureMap* features) const {
  return m2m::m2m_forward(image, mask, *model_, features);
}

MatteResult matte_from_prompt(const ImageRGB& image, const guidance::Prompt& prompt,
                              const std::vector<guidance::MaskCandidate>& candidates, const Refiner& refiner,
                              const InferenceConfig& cfg, const guidance::FeatureMap* features) {
  cfg.validate();
  for (const auto& c : candidates) {
    if (!image.same_extent(c.mask)) {
      throw ShapeError(fmt::format("candidate {} is {}x{}, image is {}x{}", c.id, c.mask.width, c.mask.height,
                                   image.width, image.height));
    }
  }
  const auto& selected = guidance::select_mask(candidates, prompt);
  auto pre = preprocess(image, cfg.target);
  const auto mask = preprocess_mask(selected.mask, pre.transform);
  auto preds = refiner.refine(pre.image, mask, features);
  const auto policy = cfg.policy();
  const auto merged = merge_multiscale(merge_base(policy, mask, preds), preds, policy);
  return MatteResult{restore(merged, pre.transform), selected, std::move(preds), pre.transform};
}

}  // namespace mam::infer
