#include "mam/m2m/model.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mam/core/convert.hpp"
#include "mam/errors.hpp"

namespace mam::m2m {

M2MConfig toy_config(std::uint64_t seed) {
  M2MConfig cfg;
  cfg.feature_channels = 8;
  cfg.widths = {16, 8, 8};
  cfg.seed = seed;
  return cfg;
}

namespace {

template <typename T>
guidance::FeatureEncoder<T> make_encoder(const M2MConfig& cfg, ad::ParamSet<T>& params, ad::BufferSet<T>& buffers,
                                         ad::Initializer& init) {
  cfg.validate();
  return guidance::FeatureEncoder<T>(guidance::EncoderConfig{cfg.feature_channels}, params, buffers, init);
}

}  // namespace

template <typename T>
MattingModel<T>::MattingModel(const M2MConfig& cfg) : cfg_(cfg) {
  ad::Initializer init(cfg.seed);
  encoder_ = make_encoder(cfg, params_, buffers_, init);
  network_ = M2MNetwork<T>(cfg, params_, buffers_, init);
  spdlog::debug("model initialized: {} encoder + {} m2m parameters", encoder_parameter_count(),
                m2m_parameter_count());
}

template <typename T>
ScaleOutputs<T> MattingModel<T>::forward(const ad::Tensor<T>& images, const ad::Tensor<T>& masks, bool training,
                                         const ad::Tensor<T>* features) const {
  const auto d = ad::as_nchw(images.shape(), "model images");
  if (d.h == 0 || d.w == 0 || d.h % 16 != 0 || d.w % 16 != 0) {
    throw ShapeError(fmt::format("model: image extents {}x{} must be positive multiples of 16", d.w, d.h));
  }
  if (features != nullptr) return network_(images, masks, *features, training);
  return network_(images, masks, encoder_(images, training), training);
}

MultiScalePrediction m2m_forward(const ImageRGB& image, const BinaryMask& mask, const MattingModel<float>& model,
                                 const guidance::FeatureMap* features) {
  ad::NoGradGuard guard;
  const auto images = stack_images<float>({&image});
  const auto masks = stack_planes<float>(std::vector<const BinaryMask*>{&mask});
  ScaleOutputs<float> out;
  if (features != nullptr) {
    const auto& t = features->tensor;
    const auto f = t.reshape({1, t.dim(0), t.dim(1), t.dim(2)});
    out = model.forward(images, masks, false, &f);
  } else {
    out = model.forward(images, masks, false);
  }
  return MultiScalePrediction{plane_of(out.os8, 0), plane_of(out.os4, 0), plane_of(out.os1, 0)};
}

template class MattingModel<float>;
template class MattingModel<double>;

}  // namespace mam::m2m
