#pragma once

#include <array>
#include <string>
#include <vector>

#include "mam/ad/layers.hpp"
#include "mam/core/image.hpp"
#include "mam/guidance/guidance.hpp"

namespace mam::guidance {

struct EncoderConfig {
  int channels = 32;
};

/// Stage widths [max(8, C/4), max(8, C/2), C, C].
std::array<int, 4> encoder_widths(int channels);
std::size_t encoder_parameter_count(const EncoderConfig& cfg);

/// Four stride-2 conv3×3 → batch-norm → leaky-ReLU stages: N×3×H×W →
/// N×C×H/16×W/16.
template <typename T>
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(const EncoderConfig& cfg, ad::ParamSet<T>& params, ad::BufferSet<T>& buffers,
                 ad::Initializer& init, const std::string& prefix = "encoder");

  [[nodiscard]] ad::Tensor<T> operator()(const ad::Tensor<T>& images, bool training) const;
  [[nodiscard]] const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  std::vector<ad::Conv2dLayer<T>> convs_;
  std::vector<ad::BatchNorm2d<T>> norms_;
};

/// Inference-mode features for one image whose extents are multiples of 16
/// (ContractError otherwise).
FeatureMap encode_features(const ImageRGB& image, const FeatureEncoder<float>& encoder);

extern template class FeatureEncoder<float>;
extern template class FeatureEncoder<double>;

}  // namespace mam::guidance
