#include "mam/ad/layers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam::ad {

template <typename T>
Tensor<T> SelfAttention2d<T>::operator()(const Tensor<T>& x) const {
  const auto d = as_nchw(x.shape(), "self_attention2d");
  const std::int64_t positions = std::int64_t(d.h) * d.w;
  if (positions * positions > max_attention_entries) {
    throw ResourceError(fmt::format(
        "self_attention2d: {}x{} input needs {} attention entries, above the cap of {}; keep "
        "attention in the os8 blocks only or reduce the input size",
        d.h, d.w, positions * positions, max_attention_entries));
  }
  const T inv_norm = T(1.0 / std::sqrt(double(query.out_channels())));
  auto attended = spatial_attention(query(x), key(x), value(x), inv_norm);
  return add(x, mul_scalar(out(attended), gate));
}

template <typename T>
Tensor<T> SelfAttention2d<T>::attention_map(const Tensor<T>& x) const {
  NoGradGuard guard;
  const T inv_norm = T(1.0 / std::sqrt(double(query.out_channels())));
  return attention_weights(query(x), key(x), inv_norm);
}

template <typename T>
Conv2dLayer<T> Initializer::conv(ParamSet<T>& params, const std::string& path, int in_channels,
                                 int out_channels, int kernel, int stride, int padding,
                                 bool bias) {
  const int fan_in = in_channels * kernel * kernel;
  const double gain = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));
  const double bound = gain * std::sqrt(3.0 / double(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> w(std::size_t(out_channels) * fan_in);
  for (auto& v : w) v = T(dist(rng_));
  Conv2dLayer<T> layer;
  layer.weight = Tensor<T>({out_channels, in_channels, kernel, kernel}, std::move(w), true);
  layer.stride = stride;
  layer.padding = padding;
  params.add(path + "/weight", layer.weight);
  if (bias) {
    layer.bias = Tensor<T>::zeros({out_channels}, true);
    params.add(path + "/bias", layer.bias);
  }
  return layer;
}

template <typename T>
BatchNorm2d<T> Initializer::batch_norm(ParamSet<T>& params, BufferSet<T>& buffers,
                                       const std::string& path, int channels) {
  BatchNorm2d<T> bn;
  bn.gamma = Tensor<T>::full({channels}, T(1), true);
  bn.beta = Tensor<T>::zeros({channels}, true);
  bn.running_mean = Tensor<T>::zeros({channels});
  bn.running_var = Tensor<T>::full({channels}, T(1));
  params.add(path + "/gamma", bn.gamma);
  params.add(path + "/beta", bn.beta);
  buffers.add(path + "/running_mean", bn.running_mean);
  buffers.add(path + "/running_var", bn.running_var);
  return bn;
}

template <typename T>
SelfAttention2d<T> Initializer::attention(ParamSet<T>& params, const std::string& path,
                                          int channels) {
  if (channels % kAttentionReduction != 0) {
    throw ConfigError(fmt::format("self_attention2d at '{}': {} channels not divisible by {}", path,
                                  channels, kAttentionReduction));
  }
  const int reduced = channels / kAttentionReduction;
  SelfAttention2d<T> att;
  att.query = conv<T>(params, path + "/query", channels, reduced, 1, 1, 0);
  att.key = conv<T>(params, path + "/key", channels, reduced, 1, 1, 0);
  att.value = conv<T>(params, path + "/value", channels, channels, 1, 1, 0);
  att.out = conv<T>(params, path + "/out", channels, channels, 1, 1, 0);
  att.gate = Tensor<T>::zeros({1}, true);
  params.add(path + "/gate", att.gate);
  return att;
}

template struct SelfAttention2d<float>;
template struct SelfAttention2d<double>;

#define MAM_INSTANTIATE_INIT(T)                                                                  \
  template Conv2dLayer<T> Initializer::conv<T>(ParamSet<T>&, const std::string&, int, int, int,  \
                                               int, int, bool);                                  \
  template BatchNorm2d<T> Initializer::batch_norm<T>(ParamSet<T>&, BufferSet<T>&,                \
                                                     const std::string&, int);                   \
  template SelfAttention2d<T> Initializer::attention<T>(ParamSet<T>&, const std::string&, int);

MAM_INSTANTIATE_INIT(float)
MAM_INSTANTIATE_INIT(double)

#undef MAM_INSTANTIATE_INIT

}  // namespace mam::ad
