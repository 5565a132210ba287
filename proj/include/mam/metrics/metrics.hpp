#pragma once

#include <vector>

#include "mam/core/image.hpp"

namespace mam::metrics {

enum class RegionKind { All, Tri };

struct RegionSpec {
  RegionKind kind = RegionKind::All;
  // Tri band radius; < 0 picks round(12 · long side / 1024), at least 1.
  int band_radius = -1;

  static RegionSpec all() { return {}; }
  static RegionSpec tri(int radius = -1) { return {RegionKind::Tri, radius}; }
};

/// All pixels, or the fractional-α pixels of gt (0.01 < α < 0.99, plus hard
/// edges) dilated by the band radius.
BinaryMask region_mask(const AlphaMatte& gt, const RegionSpec& region);
int default_band_radius(int width, int height);

// Reported scaling: SAD = Σ|Δ| / 1000, MAD = mean|Δ| · 1e3, MSE = mean Δ² · 1e3,
// Grad and Conn · 1e-3. Every function throws ShapeError on extent mismatch
// and ConfigError naming the region when it is empty.

struct PixelErrors {
  double sad = 0.0;
  double mad = 0.0;
  double mse = 0.0;
};

PixelErrors pixel_errors(const AlphaMatte& pred, const AlphaMatte& gt, const RegionSpec& region = {});

/// Σ_region (‖∇pred‖ − ‖∇gt‖)² with first-order Gaussian-derivative filters.
double grad_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionSpec& region = {}, double sigma = 1.4);

/// Connectivity: for θ = step, 2·step, …, 1 the largest 4-connected component
/// of {pred ≥ θ} ∩ {gt ≥ θ}; each pixel's level l is the last θ before it
/// leaves that component (1 if it never does); φ = 1 − (α − l)·[α − l ≥ 0.15];
/// error Σ_region |φ_pred − φ_gt|.
double conn_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionSpec& region = {}, double step = 0.1);

/// Unscaled versions (the raw sums / means), as used by IMQ.
double raw_grad(const AlphaMatte& pred, const AlphaMatte& gt, const BinaryMask& region, double sigma = 1.4);
double raw_conn(const AlphaMatte& pred, const AlphaMatte& gt, const BinaryMask& region, double step = 0.1);

/// Gaussian first-derivative kernels (x then y), each (2h+1)², normalized to
/// unit L2 norm, with h = ceil(σ·sqrt(−2·ln(sqrt(2π)·σ·0.01))).
struct GaussianDerivative {
  int half = 0;
  std::vector<double> dx, dy;
};
GaussianDerivative gaussian_derivative(double sigma);

enum class Similarity { Mad, Mse, Grad, Conn };

struct IMQConfig {
  double threshold = 0.5;  // IoU of binarized mattes must exceed this
  double tau = 0.1;
  Similarity similarity = Similarity::Mad;

  void validate() const;
};

/// Greedy one-to-one matching by descending IoU of mattes binarized at 0.5
/// (ties: lower error first). Matches with IoU > threshold are true positives
/// with quality Q = max(0, 1 − err/τ), err in raw units over the whole image.
/// IMQ = 100 · ΣQ / (TP + FP/2 + FN/2); both lists empty gives 100.
double imq(const std::vector<AlphaMatte>& preds, const std::vector<AlphaMatte>& gts, const IMQConfig& cfg = {});

}  // namespace mam::metrics
