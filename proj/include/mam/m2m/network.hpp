#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mam/ad/layers.hpp"

namespace mam::m2m {

enum Scale { kOs8 = 0, kOs4 = 1, kOs1 = 2 };

struct M2MConfig {
  int feature_channels = 32;
  std::array<int, 3> widths{256, 96, 32};
  std::array<int, 3> blocks{3, 3, 2};
  std::array<bool, 3> attention{true, false, false};
  std::uint64_t seed = 0;

  /// Throws ConfigError for non-positive counts/widths or attention widths
  /// not divisible by the attention reduction factor.
  void validate() const;
};

/// conv3×3 (no bias) → batch-norm → leaky-ReLU(0.2), then gated self-attention when
/// enabled; adds the input back when `residual` is set.
template <typename T>
struct RefinementBlock {
  ad::Conv2dLayer<T> conv;
  ad::BatchNorm2d<T> norm;
  std::optional<ad::SelfAttention2d<T>> attention;
  bool residual = false;

  [[nodiscard]] ad::Tensor<T> operator()(const ad::Tensor<T>& x, bool training) const;
};

/// N×1×h×w alpha predictions at 1/8, 1/4 and full resolution.
template <typename T>
struct ScaleOutputs {
  ad::Tensor<T> os8;
  ad::Tensor<T> os4;
  ad::Tensor<T> os1;
};

/// Mask-to-matte refinement network.
///
/// F_m2m = [image↓8 (bilinear), mask↓8 (area, rebinarized), features↑2] has
/// C + 4 channels. Each scale runs its blocks (block 0 changes the channel
/// count, the rest are residual) and a conv3×3 → sigmoid head. The trunk is
/// upsampled bilinearly ×2 into os4 and ×4 into os1; at both scales the image
/// resampled to that resolution is concatenated before block 0.
template <typename T>
class M2MNetwork {
 public:
  M2MNetwork() = default;
  M2MNetwork(const M2MConfig& cfg, ad::ParamSet<T>& params, ad::BufferSet<T>& buffers,
             ad::Initializer& init, const std::string& prefix = "m2m");

  /// images N×3×H×W, masks N×1×H×W, features N×C×H/16×W/16; H, W multiples of 16.
  [[nodiscard]] ScaleOutputs<T> operator()(const ad::Tensor<T>& images, const ad::Tensor<T>& masks,
                                           const ad::Tensor<T>& features, bool training) const;

  [[nodiscard]] const M2MConfig& config() const { return cfg_; }
  [[nodiscard]] std::vector<RefinementBlock<T>>& blocks(Scale s) { return blocks_[s]; }
  [[nodiscard]] ad::Conv2dLayer<T>& head(Scale s) { return heads_[s]; }

 private:
  M2MConfig cfg_;
  std::array<std::vector<RefinementBlock<T>>, 3> blocks_;
  std::array<ad::Conv2dLayer<T>, 3> heads_;
};

/// Trainable scalar count implied by the configuration.
std::size_t m2m_parameter_count(const M2MConfig& cfg);

extern template struct RefinementBlock<float>;
extern template struct RefinementBlock<double>;
extern template class M2MNetwork<float>;
extern template class M2MNetwork<double>;

}  // namespace mam::m2m
