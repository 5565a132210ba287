#include "mam/guidance/encoder.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "mam/ad/ops.hpp"
#include "mam/core/convert.hpp"
#include "mam/errors.hpp"

namespace mam::guidance {

std::array<int, 4> encoder_widths(int channels) {
  return {std::max(8, channels / 4), std::max(8, channels / 2), channels, channels};
}

std::size_t encoder_parameter_count(const EncoderConfig& cfg) {
  std::size_t n = 0;
  int in = 3;
  for (int out : encoder_widths(cfg.channels)) {
    n += std::size_t(out) * in * 9;   // conv weight (no bias before batch-norm)
    n += 2 * std::size_t(out);        // batch-norm affine
    in = out;
  }
  return n;
}

template <typename T>
FeatureEncoder<T>::FeatureEncoder(const EncoderConfig& cfg, ad::ParamSet<T>& params,
                                  ad::BufferSet<T>& buffers, ad::Initializer& init,
                                  const std::string& prefix)
    : cfg_(cfg) {
  if (cfg.channels < 1) throw ConfigError(fmt::format("encoder: channels must be >= 1, got {}", cfg.channels));
  int in = 3;
  const auto widths = encoder_widths(cfg.channels);
  for (std::size_t s = 0; s < widths.size(); ++s) {
    const std::string path = fmt::format("{}/stage{}", prefix, s);
    convs_.push_back(init.conv<T>(params, path + "/conv", in, widths[s], 3, 2, 1, false));
    norms_.push_back(init.batch_norm<T>(params, buffers, path + "/norm", widths[s]));
    in = widths[s];
  }
}

template <typename T>
ad::Tensor<T> FeatureEncoder<T>::operator()(const ad::Tensor<T>& images, bool training) const {
  const auto d = ad::as_nchw(images.shape(), "encoder");
  if (d.h % 16 != 0 || d.w % 16 != 0) {
    throw ContractError(fmt::format(
        "encoder: image extents {}x{} must be multiples of 16 (preprocess first)", d.w, d.h));
  }
  ad::Tensor<T> x = images;
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    x = ad::leaky_relu(norms_[s](convs_[s](x), training), T(ad::kLeakySlope));
  }
  return x;
}

FeatureMap encode_features(const ImageRGB& image, const FeatureEncoder<float>& encoder) {
  ad::NoGradGuard guard;
  const auto batch = stack_images<float>({&image});
  const auto f = encoder(batch, false);
  return FeatureMap{f.reshape({f.dim(1), f.dim(2), f.dim(3)})};
}

template class FeatureEncoder<float>;
template class FeatureEncoder<double>;

}  // namespace mam::guidance
