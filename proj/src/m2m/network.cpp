#include "mam/m2m/network.hpp"

#include <fmt/format.h>

#include "mam/ad/ops.hpp"
#include "mam/errors.hpp"

namespace mam::m2m {

namespace {

const char* const kScaleNames[3] = {"os8", "os4", "os1"};

// Channels entering block 0 of each scale.
std::array<int, 3> stage_inputs(const M2MConfig& cfg) {
  return {cfg.feature_channels + 4, cfg.widths[kOs8] + 3, cfg.widths[kOs4] + 3};
}

}  // namespace

void M2MConfig::validate() const {
  if (feature_channels < 1) throw ConfigError(fmt::format("m2m: feature_channels must be >= 1, got {}", feature_channels));
  for (int s = 0; s < 3; ++s) {
    if (widths[s] < 1) throw ConfigError(fmt::format("m2m: {} width must be >= 1, got {}", kScaleNames[s], widths[s]));
    if (blocks[s] < 1) throw ConfigError(fmt::format("m2m: {} block count must be >= 1, got {}", kScaleNames[s], blocks[s]));
    if (attention[s] && widths[s] % ad::kAttentionReduction != 0) {
      throw ConfigError(fmt::format("m2m: {} width {} must be divisible by {} for attention", kScaleNames[s],
                                    widths[s], ad::kAttentionReduction));
    }
  }
}

template <typename T>
ad::Tensor<T> RefinementBlock<T>::operator()(const ad::Tensor<T>& x, bool training) const {
  auto y = ad::leaky_relu(norm(conv(x), training), T(ad::kLeakySlope));
  if (attention) y = (*attention)(y);
  if (residual) {
    if (x.shape() != y.shape()) {
      throw ShapeError(fmt::format("refinement block: residual needs matching shapes, got {} and {}",
                                   ad::shape_str(x.shape()), ad::shape_str(y.shape())));
    }
    y = ad::add(x, y);
  }
  return y;
}

template <typename T>
M2MNetwork<T>::M2MNetwork(const M2MConfig& cfg, ad::ParamSet<T>& params, ad::BufferSet<T>& buffers,
                          ad::Initializer& init, const std::string& prefix)
    : cfg_(cfg) {
  cfg.validate();
  const auto inputs = stage_inputs(cfg);
  for (int s = 0; s < 3; ++s) {
    int in = inputs[s];
    for (int b = 0; b < cfg.blocks[s]; ++b) {
      const std::string path = fmt::format("{}/{}/block{}", prefix, kScaleNames[s], b);
      RefinementBlock<T> block;
      block.conv = init.conv<T>(params, path + "/conv", in, cfg.widths[s], 3, 1, 1, false);
      block.norm = init.batch_norm<T>(params, buffers, path + "/norm", cfg.widths[s]);
      if (cfg.attention[s]) block.attention = init.attention<T>(params, path + "/attention", cfg.widths[s]);
      block.residual = in == cfg.widths[s] && b > 0;
      blocks_[s].push_back(std::move(block));
      in = cfg.widths[s];
    }
    heads_[s] = init.conv<T>(params, fmt::format("{}/{}/head", prefix, kScaleNames[s]), cfg.widths[s], 1, 3, 1, 1);
  }
}

template <typename T>
ScaleOutputs<T> M2MNetwork<T>::operator()(const ad::Tensor<T>& images, const ad::Tensor<T>& masks,
                                          const ad::Tensor<T>& features, bool training) const {
  const auto di = ad::as_nchw(images.shape(), "m2m images");
  const auto dm = ad::as_nchw(masks.shape(), "m2m masks");
  const auto df = ad::as_nchw(features.shape(), "m2m features");
  if (di.c != 3 || di.h % 16 != 0 || di.w % 16 != 0 || di.h == 0 || di.w == 0) {
    throw ShapeError(fmt::format("m2m: images must be N×3×H×W with H, W multiples of 16, got {}",
                                 ad::shape_str(images.shape())));
  }
  if (dm.n != di.n || dm.c != 1 || dm.h != di.h || dm.w != di.w) {
    throw ShapeError(fmt::format("m2m: mask {} does not match images {}", ad::shape_str(masks.shape()),
                                 ad::shape_str(images.shape())));
  }
  if (df.n != di.n || df.c != cfg_.feature_channels || df.h != di.h / 16 || df.w != di.w / 16) {
    throw ShapeError(fmt::format("m2m: features {} do not match images {} with C = {}",
                                 ad::shape_str(features.shape()), ad::shape_str(images.shape()),
                                 cfg_.feature_channels));
  }
  const int h8 = di.h / 8, w8 = di.w / 8;
  const int h4 = di.h / 4, w4 = di.w / 4;

  // The mask is an input constant: area-average, then back to {0, 1}.
  ad::Tensor<T> mask8;
  {
    ad::NoGradGuard guard;
    auto avg = ad::resample_area(masks, h8, w8);
    std::vector<T> bin(avg.numel());
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = avg.at(i) >= T(0.5) - T(1e-6) ? T(1) : T(0);
    mask8 = ad::Tensor<T>(avg.shape(), std::move(bin));
  }
  auto x = ad::concat_channels<T>({ad::resample_bilinear(images, h8, w8), mask8,
                                   ad::resample_bilinear(features, h8, w8)});

  auto run_scale = [&](Scale s, ad::Tensor<T> t) {
    for (const auto& block : blocks_[s]) t = block(t, training);
    return t;
  };

  ScaleOutputs<T> out;
  x = run_scale(kOs8, x);
  out.os8 = ad::sigmoid(heads_[kOs8](x));
  x = ad::concat_channels<T>({ad::resample_bilinear(x, h4, w4), ad::resample_bilinear(images, h4, w4)});
  x = run_scale(kOs4, x);
  out.os4 = ad::sigmoid(heads_[kOs4](x));
  x = ad::concat_channels<T>({ad::resample_bilinear(x, di.h, di.w), images});
  x = run_scale(kOs1, x);
  out.os1 = ad::sigmoid(heads_[kOs1](x));
  return out;
}

std::size_t m2m_parameter_count(const M2MConfig& cfg) {
  cfg.validate();
  const auto inputs = stage_inputs(cfg);
  std::size_t n = 0;
  for (int s = 0; s < 3; ++s) {
    const std::size_t w = std::size_t(cfg.widths[s]);
    std::size_t in = std::size_t(inputs[s]);
    for (int b = 0; b < cfg.blocks[s]; ++b) {
      n += in * w * 9 + 2 * w;
      if (cfg.attention[s]) {
        const std::size_t r = w / ad::kAttentionReduction;
        n += 2 * (w * r + r) + 2 * (w * w + w) + 1;
      }
      in = w;
    }
    n += w * 9 + 1;
  }
  return n;
}

template struct RefinementBlock<float>;
template struct RefinementBlock<double>;
template class M2MNetwork<float>;
template class M2MNetwork<double>;

}  // namespace mam::m2m
