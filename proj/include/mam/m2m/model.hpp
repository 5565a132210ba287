#pragma once

#include <optional>

#include "mam/core/image.hpp"
#include "mam/guidance/encoder.hpp"
#include "mam/guidance/guidance.hpp"
#include "mam/m2m/network.hpp"

namespace mam::m2m {

/// Desk-scale preset: C = 8, widths 16/8/8.
M2MConfig toy_config(std::uint64_t seed = 0);

/// Feature encoder (parameters under "encoder/") plus M2M network (under
/// "m2m/"), sharing one parameter and buffer set. Initialization is a pure
/// function of the config, seed included.
template <typename T>
class MattingModel {
 public:
  explicit MattingModel(const M2MConfig& cfg);
  MattingModel(const MattingModel&) = delete;
  MattingModel& operator=(const MattingModel&) = delete;

  [[nodiscard]] ad::Tensor<T> features(const ad::Tensor<T>& images, bool training) const {
    return encoder_(images, training);
  }
  /// Uses `features` when given (imported guidance), else the encoder.
  [[nodiscard]] ScaleOutputs<T> forward(const ad::Tensor<T>& images, const ad::Tensor<T>& masks, bool training,
                                        const ad::Tensor<T>* features = nullptr) const;

  [[nodiscard]] const M2MConfig& config() const { return cfg_; }
  [[nodiscard]] ad::ParamSet<T>& params() { return params_; }
  [[nodiscard]] const ad::ParamSet<T>& params() const { return params_; }
  [[nodiscard]] ad::BufferSet<T>& buffers() { return buffers_; }
  [[nodiscard]] const ad::BufferSet<T>& buffers() const { return buffers_; }
  [[nodiscard]] M2MNetwork<T>& network() { return network_; }
  [[nodiscard]] guidance::FeatureEncoder<T>& encoder() { return encoder_; }
  [[nodiscard]] const guidance::FeatureEncoder<T>& encoder() const { return encoder_; }

  [[nodiscard]] std::size_t encoder_parameter_count() const { return params_.subset("encoder/").scalar_count(); }
  [[nodiscard]] std::size_t m2m_parameter_count() const { return params_.subset("m2m/").scalar_count(); }

 private:
  M2MConfig cfg_;
  ad::ParamSet<T> params_;
  ad::BufferSet<T> buffers_;
  guidance::FeatureEncoder<T> encoder_;
  M2MNetwork<T> network_;
};

struct MultiScalePrediction {
  AlphaMatte os8;
  AlphaMatte os4;
  AlphaMatte os1;
};

/// Inference-mode forward for one preprocessed image (extents multiples of
/// 16). `features` replaces the encoder output when provided.
MultiScalePrediction m2m_forward(const ImageRGB& image, const BinaryMask& mask, const MattingModel<float>& model,
                                 const guidance::FeatureMap* features = nullptr);

extern template class MattingModel<float>;
extern template class MattingModel<double>;

}  // namespace mam::m2m
