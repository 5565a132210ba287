#pragma once

#include <vector>

#include "mam/ad/tensor.hpp"
#include "mam/kernels/separable.hpp"

namespace mam::ad {

// Spatial ops take C×H×W or N×C×H×W inputs and return the same rank.

/// Cross-correlation with zero padding. `bias` may be undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding);

/// Per-channel normalization. Training mode normalizes with batch statistics
/// (biased variance) and moves the running stats toward the batch mean and
/// unbiased variance by `momentum`; inference mode uses the running stats.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T eps,
                     T momentum = T(0.1));

/// max(x, slope·x); the x = 0 subgradient is `slope`.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
/// a · s where s holds a single (learnable) value.
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, const Tensor<T>& s);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

/// Σ_n scales[n] · Σ |x[n, ...]| over the leading (batch) axis.
template <typename T>
Tensor<T> abs_sum_per_sample(const Tensor<T>& x, const std::vector<T>& scales);

/// Concatenates along the channel axis; all inputs share batch and spatial extents.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs);

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int count);

/// Applies a separable linear operator to every H×W plane.
template <typename T>
Tensor<T> resample(const Tensor<T>& input, const kernels::LinearMap1D& rows,
                   const kernels::LinearMap1D& cols);

/// Bilinear, half-pixel centers, edge clamp.
template <typename T>
Tensor<T> resample_bilinear(const Tensor<T>& input, int out_h, int out_w);

/// Bilinear by a rational factor num/den applied to both axes; the scaled
/// extents must be integral and >= 1.
template <typename T>
Tensor<T> resample_bilinear_scale(const Tensor<T>& input, int num, int den);

/// Area averaging to the given extents.
template <typename T>
Tensor<T> resample_area(const Tensor<T>& input, int out_h, int out_w);

/// Dot-product attention over all H·W positions.
/// query/key: N×Ck×H×W, value: N×C×H×W → N×C×H×W.
template <typename T>
Tensor<T> spatial_attention(const Tensor<T>& query, const Tensor<T>& key, const Tensor<T>& value,
                            T inv_norm);

/// The softmax matrix of spatial_attention (N×P×P), without graph history.
template <typename T>
Tensor<T> attention_weights(const Tensor<T>& query, const Tensor<T>& key, T inv_norm);

/// Resolves a rank-3 or rank-4 shape to (N, C, H, W).
struct Nchw {
  int n, c, h, w;
};
Nchw as_nchw(const Shape& shape, const char* op);

}  // namespace mam::ad
