#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "mam/ad/ops.hpp"
#include "mam/ad/param_set.hpp"

namespace mam::ad {

// Layers hold shared handles into a ParamSet/BufferSet, so optimizer updates
// and checkpoint loads are visible to them without re-binding.

template <typename T>
struct Conv2dLayer {
  Tensor<T> weight;  // Cout×Cin×k×k
  Tensor<T> bias;    // Cout, or undefined
  int stride = 1;
  int padding = 0;

  [[nodiscard]] Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, padding);
  }
  [[nodiscard]] int in_channels() const { return weight.dim(1); }
  [[nodiscard]] int out_channels() const { return weight.dim(0); }
};

template <typename T>
struct BatchNorm2d {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  // Training mode updates the running stats through their shared storage;
  // inference mode only reads them.
  [[nodiscard]] Tensor<T> operator()(const Tensor<T>& x, bool training) const {
    Tensor<T> mean_handle = running_mean;
    Tensor<T> var_handle = running_var;
    return batch_norm(x, gamma, beta, mean_handle, var_handle, training, eps, momentum);
  }
};

/// Gated spatial self-attention: x + γ · out(attend(query(x), key(x), value(x))).
/// Query/key use channels / reduction maps; the softmax is scaled by
/// 1/sqrt(key channels).
template <typename T>
struct SelfAttention2d {
  Conv2dLayer<T> query;
  Conv2dLayer<T> key;
  Conv2dLayer<T> value;
  Conv2dLayer<T> out;
  Tensor<T> gate;  // γ, one value
  std::int64_t max_attention_entries = std::int64_t(1) << 28;

  [[nodiscard]] Tensor<T> operator()(const Tensor<T>& x) const;
  /// The attention matrix for x (no graph history).
  [[nodiscard]] Tensor<T> attention_map(const Tensor<T>& x) const;
};

inline constexpr int kAttentionReduction = 8;
inline constexpr double kLeakySlope = 0.2;

/// Seeded initializer: Kaiming-uniform conv weights (leaky-ReLU gain), zero
/// biases, unit/zero batch-norm affine, zero attention gate. Values are drawn
/// in double so float and double networks built from one seed agree.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  /// `bias` = false leaves the bias undefined (for convs feeding batch-norm,
  /// where a bias would receive no gradient).
  template <typename T>
  Conv2dLayer<T> conv(ParamSet<T>& params, const std::string& path, int in_channels,
                      int out_channels, int kernel, int stride, int padding, bool bias = true);
  template <typename T>
  BatchNorm2d<T> batch_norm(ParamSet<T>& params, BufferSet<T>& buffers, const std::string& path,
                            int channels);
  template <typename T>
  SelfAttention2d<T> attention(ParamSet<T>& params, const std::string& path, int channels);

 private:
  std::mt19937_64 rng_;
};

}  // namespace mam::ad
