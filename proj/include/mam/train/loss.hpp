#pragma once

#include <vector>

#include "mam/ad/tensor.hpp"
#include "mam/core/image.hpp"
#include "mam/m2m/model.hpp"
#include "mam/train/config.hpp"

namespace mam::train {

/// Binary loss masks at 1/8, 1/4 and full resolution.
struct WeightMaps {
  Plane w_os8;
  Plane w_os4;
  Plane w_os1;
};

/// Radius of the dilation applied to the guidance mask at 1/4 scale.
inline constexpr int kMaskWeightRadius = 3;

/// Before the warmup iteration every map is all-ones. From it on (≥),
/// w_os4 is the guidance mask area-resized to 1/4 and dilated by 3, and w_os1
/// is the transition band (radius 5) of alpha_os4 upsampled to full size.
/// w_os8 stays all-ones. `alpha_os4` is the network's 1/4-scale prediction.
WeightMaps weight_maps_for_iteration(int iter, const TrainConfig& cfg, const BinaryMask& guidance_mask,
                                     const AlphaMatte& alpha_os4);

// Tensor forms take N×1×H×W pred/gt/weights and average the per-sample
// normalized losses over the batch. Only `pred` carries gradient.

/// (1/N) Σ_n Σ w|pred − gt| / max(Σ w, 1).
template <typename T>
ad::Tensor<T> weighted_l1(const ad::Tensor<T>& pred, const ad::Tensor<T>& gt, const ad::Tensor<T>& weight);

/// Laplacian pyramid of w·(pred − gt) with `levels` difference levels; level k
/// (finest k = 0) is weighted 2^k and the coarse base 2^levels, each summed as
/// |·| and normalized like weighted_l1. levels = 0 uses the largest count the
/// extents allow, capped at 4.
template <typename T>
ad::Tensor<T> weighted_laplacian(const ad::Tensor<T>& pred, const ad::Tensor<T>& gt, const ad::Tensor<T>& weight,
                                 int levels = 0);

/// Per-scale targets: gt area-averaged to each prediction's extents.
template <typename T>
struct ScaleTargets {
  ad::Tensor<T> os8, os4, os1;
};
template <typename T>
ScaleTargets<T> downsample_targets(const ad::Tensor<T>& gt, int h8, int w8, int h4, int w4);

/// λ_l1·Σ_s L1_s + λ_lap·Σ_s Lap_s over the three scales.
template <typename T>
ad::Tensor<T> total_loss(const ad::Tensor<T>& os8, const ad::Tensor<T>& os4, const ad::Tensor<T>& os1,
                         const ad::Tensor<T>& gt, const std::vector<WeightMaps>& maps, const LossWeights& weights);

// Plane conveniences (64-bit, no gradient).
double loss_weighted_l1(const AlphaMatte& pred, const AlphaMatte& gt, const Plane& weight);
double loss_weighted_laplacian(const AlphaMatte& pred, const AlphaMatte& gt, const Plane& weight, int levels = 0);

double total_loss(const m2m::MultiScalePrediction& preds, const AlphaMatte& gt, const WeightMaps& maps,
                  const LossWeights& weights);

}  // namespace mam::train
