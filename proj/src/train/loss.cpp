#include "mam/train/loss.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mam/ad/ops.hpp"
#include "mam/core/convert.hpp"
#include "mam/core/morphology.hpp"
#include "mam/core/pyramid.hpp"
#include "mam/core/resize.hpp"
#include "mam/errors.hpp"
#include "mam/kernels/separable.hpp"

namespace mam::train {

namespace {

Plane ones(int width, int height) { return Plane(width, height, 1.0); }

void check_same(const ad::Shape& a, const ad::Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(fmt::format("{}: shapes differ ({} vs {})", what, ad::shape_str(a), ad::shape_str(b)));
  }
}

// 1 / (N · max(Σ w_n, 1)) per sample.
template <typename T>
std::vector<T> sample_scales(const ad::Tensor<T>& weight) {
  const auto d = ad::as_nchw(weight.shape(), "loss weight");
  const std::size_t per = std::size_t(d.c) * d.h * d.w;
  std::vector<T> scales(d.n);
  const auto w = weight.values();
  for (int n = 0; n < d.n; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += double(w[n * per + i]);
    scales[n] = T(1.0 / (double(d.n) * std::max(s, 1.0)));
  }
  return scales;
}

template <typename T>
std::vector<T> scaled(std::vector<T> v, double factor) {
  for (auto& x : v) x = T(double(x) * factor);
  return v;
}

}  // namespace

WeightMaps weight_maps_for_iteration(int iter, const TrainConfig& cfg, const BinaryMask& guidance_mask,
                                     const AlphaMatte& alpha_os4) {
  const int w = guidance_mask.width;
  const int h = guidance_mask.height;
  if (w % 8 != 0 || h % 8 != 0) {
    throw ShapeError(fmt::format("weight maps: {}x{} guidance mask is not a multiple of 8", w, h));
  }
  WeightMaps maps{ones(w / 8, h / 8), ones(w / 4, h / 4), ones(w, h)};
  if (iter < cfg.warmup_iterations) return maps;
  if (alpha_os4.width != w / 4 || alpha_os4.height != h / 4) {
    throw ShapeError(fmt::format("weight maps: alpha_os4 is {}x{}, expected {}x{}", alpha_os4.width,
                                 alpha_os4.height, w / 4, h / 4));
  }
  maps.w_os4 = to_alpha(dilate(resize_mask(guidance_mask, w / 4, h / 4), kMaskWeightRadius));
  maps.w_os1 = to_alpha(transition_band(resize_bilinear(alpha_os4, w, h), kBandRadius, kBandLow, kBandHigh));
  return maps;
}

template <typename T>
ad::Tensor<T> weighted_l1(const ad::Tensor<T>& pred, const ad::Tensor<T>& gt, const ad::Tensor<T>& weight) {
  check_same(pred.shape(), gt.shape(), "weighted_l1 pred/gt");
  check_same(pred.shape(), weight.shape(), "weighted_l1 pred/weight");
  return ad::abs_sum_per_sample(ad::mul(ad::sub(pred, gt), weight), sample_scales(weight));
}

template <typename T>
ad::Tensor<T> weighted_laplacian(const ad::Tensor<T>& pred, const ad::Tensor<T>& gt, const ad::Tensor<T>& weight,
                                 int levels) {
  check_same(pred.shape(), gt.shape(), "weighted_laplacian pred/gt");
  check_same(pred.shape(), weight.shape(), "weighted_laplacian pred/weight");
  const auto d = ad::as_nchw(pred.shape(), "weighted_laplacian");
  if (levels == 0) levels = max_pyramid_levels(d.w, d.h);
  if (levels < 0 || (1 << levels) > std::min(d.w, d.h)) {
    throw ConfigError(fmt::format("weighted_laplacian: {} levels do not fit {}x{}", levels, d.w, d.h));
  }
  const auto scales = sample_scales(weight);
  auto current = ad::mul(ad::sub(pred, gt), weight);
  ad::Tensor<T> total;
  auto accumulate = [&](const ad::Tensor<T>& term) { total = total.defined() ? ad::add(total, term) : term; };
  for (int k = 0; k < levels; ++k) {
    const auto cd = ad::as_nchw(current.shape(), "weighted_laplacian");
    const auto coarse = ad::resample(current, kernels::pyr_down_map(cd.h), kernels::pyr_down_map(cd.w));
    const auto kd = ad::as_nchw(coarse.shape(), "weighted_laplacian");
    const auto up = ad::resample(coarse, kernels::pyr_up_map(kd.h, cd.h), kernels::pyr_up_map(kd.w, cd.w));
    accumulate(ad::abs_sum_per_sample(ad::sub(current, up), scaled(scales, double(1 << k))));
    current = coarse;
  }
  accumulate(ad::abs_sum_per_sample(current, scaled(scales, double(1 << levels))));
  return total;
}

template <typename T>
ScaleTargets<T> downsample_targets(const ad::Tensor<T>& gt, int h8, int w8, int h4, int w4) {
  ad::NoGradGuard guard;
  return {ad::resample_area(gt, h8, w8), ad::resample_area(gt, h4, w4), gt};
}

template <typename T>
ad::Tensor<T> total_loss(const ad::Tensor<T>& os8, const ad::Tensor<T>& os4, const ad::Tensor<T>& os1,
                         const ad::Tensor<T>& gt, const std::vector<WeightMaps>& maps, const LossWeights& weights) {
  const auto d8 = ad::as_nchw(os8.shape(), "total_loss os8");
  const auto d4 = ad::as_nchw(os4.shape(), "total_loss os4");
  check_same(os1.shape(), gt.shape(), "total_loss os1/gt");
  if (int(maps.size()) != d8.n) {
    throw ShapeError(fmt::format("total_loss: {} weight maps for a batch of {}", maps.size(), d8.n));
  }
  const auto targets = downsample_targets(gt, d8.h, d8.w, d4.h, d4.w);
  auto stack = [&](Plane WeightMaps::*member) {
    std::vector<const Plane*> planes;
    for (const auto& m : maps) planes.push_back(&(m.*member));
    return stack_planes<T>(planes);
  };
  const auto w8 = stack(&WeightMaps::w_os8);
  const auto w4 = stack(&WeightMaps::w_os4);
  const auto w1 = stack(&WeightMaps::w_os1);

  const ad::Tensor<T>* preds[] = {&os8, &os4, &os1};
  const ad::Tensor<T>* gts[] = {&targets.os8, &targets.os4, &targets.os1};
  const ad::Tensor<T>* ws[] = {&w8, &w4, &w1};
  ad::Tensor<T> total;
  for (int s = 0; s < 3; ++s) {
    ad::Tensor<T> term;
    if (weights.lambda_l1 != 0.0) term = ad::scale(weighted_l1(*preds[s], *gts[s], *ws[s]), T(weights.lambda_l1));
    if (weights.lambda_lap != 0.0) {
      auto lap = ad::scale(weighted_laplacian(*preds[s], *gts[s], *ws[s]), T(weights.lambda_lap));
      term = term.defined() ? ad::add(term, lap) : lap;
    }
    if (!term.defined()) continue;
    total = total.defined() ? ad::add(total, term) : term;
  }
  if (!total.defined()) return ad::Tensor<T>::scalar(T(0));
  return total;
}

namespace {

ad::Tensor<double> as_tensor(const Plane& p) { return stack_planes<double>(std::vector<const Plane*>{&p}); }

void check_planes(const Plane& a, const Plane& b, const Plane& w, const char* what) {
  if (!a.same_extent(b) || !a.same_extent(w)) {
    throw ShapeError(fmt::format("{}: extents differ ({}x{}, {}x{}, {}x{})", what, a.width, a.height, b.width,
                                 b.height, w.width, w.height));
  }
}

}  // namespace

double loss_weighted_l1(const AlphaMatte& pred, const AlphaMatte& gt, const Plane& weight) {
  check_planes(pred, gt, weight, "loss_weighted_l1");
  ad::NoGradGuard guard;
  return weighted_l1(as_tensor(pred), as_tensor(gt), as_tensor(weight)).item();
}

double loss_weighted_laplacian(const AlphaMatte& pred, const AlphaMatte& gt, const Plane& weight, int levels) {
  check_planes(pred, gt, weight, "loss_weighted_laplacian");
  ad::NoGradGuard guard;
  return weighted_laplacian(as_tensor(pred), as_tensor(gt), as_tensor(weight), levels).item();
}

double total_loss(const m2m::MultiScalePrediction& preds, const AlphaMatte& gt, const WeightMaps& maps,
                  const LossWeights& weights) {
  ad::NoGradGuard guard;
  return total_loss(as_tensor(preds.os8), as_tensor(preds.os4), as_tensor(preds.os1), as_tensor(gt),
                    std::vector<WeightMaps>{maps}, weights)
      .item();
}

#define MAM_INSTANTIATE_LOSS(T)                                                                          \
  template ad::Tensor<T> weighted_l1<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&); \
  template ad::Tensor<T> weighted_laplacian<T>(const ad::Tensor<T>&, const ad::Tensor<T>&,                 \
                                               const ad::Tensor<T>&, int);                                 \
  template ScaleTargets<T> downsample_targets<T>(const ad::Tensor<T>&, int, int, int, int);                \
  template ad::Tensor<T> total_loss<T>(const ad::Tensor<T>&, const ad::Tensor<T>&, const ad::Tensor<T>&,   \
                                       const ad::Tensor<T>&, const std::vector<WeightMaps>&,               \
                                       const LossWeights&);

MAM_INSTANTIATE_LOSS(float)
MAM_INSTANTIATE_LOSS(double)

#undef MAM_INSTANTIATE_LOSS

}  // namespace mam::train
