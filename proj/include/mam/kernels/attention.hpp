#pragma once

#include <span>

namespace mam::kernels {

// Spatial dot-product attention over P positions.
//   q, k : batch × key_channels × P
//   v    : batch × value_channels × P
//   attn : batch × P × P, attn[i][j] = softmax_j(Σ_c q[c][i] k[c][j] · inv_norm)
//   out  : batch × value_channels × P, out[c][i] = Σ_j v[c][j] attn[i][j]
struct AttentionGeometry {
  int batch = 1;
  int key_channels = 1;
  int value_channels = 1;
  int positions = 1;
};

template <typename T>
void attention_forward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                       std::span<const T> k, std::span<const T> v, std::span<T> attn,
                       std::span<T> out);

// Accumulates (+=) into dq, dk, dv. Any of them may be empty to skip.
template <typename T>
void attention_backward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                        std::span<const T> k, std::span<const T> v, std::span<const T> attn,
                        std::span<const T> dout, std::span<T> dq, std::span<T> dk,
                        std::span<T> dv);

namespace reference {

template <typename T>
void attention_forward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                       std::span<const T> k, std::span<const T> v, std::span<T> attn,
                       std::span<T> out);
template <typename T>
void attention_backward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                        std::span<const T> k, std::span<const T> v, std::span<const T> attn,
                        std::span<const T> dout, std::span<T> dq, std::span<T> dk,
                        std::span<T> dv);

}  // namespace reference

}  // namespace mam::kernels
