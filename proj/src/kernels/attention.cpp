#include "mam/kernels/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mam::kernels {

namespace {

template <typename T>
void softmax_row(T* row, int n) {
  T mx = -std::numeric_limits<T>::infinity();
  for (int j = 0; j < n; ++j) mx = std::max(mx, row[j]);
  T sum = T(0);
  for (int j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    sum += row[j];
  }
  const T inv = T(1) / sum;
  for (int j = 0; j < n; ++j) row[j] *= inv;
}

}  // namespace

template <typename T>
void attention_forward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                       std::span<const T> k, std::span<const T> v, std::span<T> attn,
                       std::span<T> out) {
  const long P = g.positions;
  const long qk_stride = long(g.key_channels) * P;
  const long v_stride = long(g.value_channels) * P;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (long i = 0; i < P; ++i) {
      const T* qn = q.data() + n * qk_stride;
      const T* kn = k.data() + n * qk_stride;
      T* row = attn.data() + (n * P + i) * P;
      std::fill(row, row + P, T(0));
      for (int c = 0; c < g.key_channels; ++c) {
        const T qc = qn[c * P + i] * inv_norm;
        const T* krow = kn + c * P;
        for (long j = 0; j < P; ++j) row[j] += qc * krow[j];
      }
      softmax_row(row, int(P));
    }
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int c = 0; c < g.value_channels; ++c) {
      const T* vrow = v.data() + n * v_stride + c * P;
      T* orow = out.data() + n * v_stride + c * P;
      for (long i = 0; i < P; ++i) {
        const T* arow = attn.data() + (n * P + i) * P;
        T acc = T(0);
        for (long j = 0; j < P; ++j) acc += vrow[j] * arow[j];
        orow[i] = acc;
      }
    }
  }
}

template <typename T>
void attention_backward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                        std::span<const T> k, std::span<const T> v, std::span<const T> attn,
                        std::span<const T> dout, std::span<T> dq, std::span<T> dk,
                        std::span<T> dv) {
  const long P = g.positions;
  const long qk_stride = long(g.key_channels) * P;
  const long v_stride = long(g.value_channels) * P;

  if (!dv.empty()) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < g.batch; ++n) {
      for (int c = 0; c < g.value_channels; ++c) {
        const T* drow = dout.data() + n * v_stride + c * P;
        T* dvrow = dv.data() + n * v_stride + c * P;
        for (long i = 0; i < P; ++i) {
          const T d = drow[i];
          const T* arow = attn.data() + (n * P + i) * P;
          for (long j = 0; j < P; ++j) dvrow[j] += d * arow[j];
        }
      }
    }
  }
  if (dq.empty() && dk.empty()) return;

  // dS = A ∘ (dA - rowsum(A ∘ dA)) · inv_norm, dA[i][j] = Σ_c dout[c][i] v[c][j].
  std::vector<T> dscores(std::size_t(g.batch) * P * P);
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (long i = 0; i < P; ++i) {
      T* ds = dscores.data() + (n * P + i) * P;
      std::fill(ds, ds + P, T(0));
      for (int c = 0; c < g.value_channels; ++c) {
        const T d = dout[n * v_stride + c * P + i];
        const T* vrow = v.data() + n * v_stride + c * P;
        for (long j = 0; j < P; ++j) ds[j] += d * vrow[j];
      }
      const T* arow = attn.data() + (n * P + i) * P;
      T dot = T(0);
      for (long j = 0; j < P; ++j) dot += arow[j] * ds[j];
      for (long j = 0; j < P; ++j) ds[j] = arow[j] * (ds[j] - dot) * inv_norm;
    }
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int c = 0; c < g.key_channels; ++c) {
      const T* krow = k.data() + n * qk_stride + c * P;
      const T* qrow = q.data() + n * qk_stride + c * P;
      for (long i = 0; i < P; ++i) {
        const T* ds = dscores.data() + (n * P + i) * P;
        if (!dq.empty()) {
          T acc = T(0);
          for (long j = 0; j < P; ++j) acc += ds[j] * krow[j];
          dq[n * qk_stride + c * P + i] += acc;
        }
        if (!dk.empty()) {
          T* dkrow = dk.data() + n * qk_stride + c * P;
          const T qi = qrow[i];
          for (long j = 0; j < P; ++j) dkrow[j] += ds[j] * qi;
        }
      }
    }
  }
}

namespace reference {

template <typename T>
void attention_forward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                       std::span<const T> k, std::span<const T> v, std::span<T> attn,
                       std::span<T> out) {
  const long P = g.positions;
  for (int n = 0; n < g.batch; ++n) {
    for (long i = 0; i < P; ++i) {
      T* row = attn.data() + (n * P + i) * P;
      for (long j = 0; j < P; ++j) {
        T s = T(0);
        for (int c = 0; c < g.key_channels; ++c) {
          s += q[(long(n) * g.key_channels + c) * P + i] * k[(long(n) * g.key_channels + c) * P + j];
        }
        row[j] = s * inv_norm;
      }
      softmax_row(row, int(P));
      for (int c = 0; c < g.value_channels; ++c) {
        T acc = T(0);
        for (long j = 0; j < P; ++j) acc += v[(long(n) * g.value_channels + c) * P + j] * row[j];
        out[(long(n) * g.value_channels + c) * P + i] = acc;
      }
    }
  }
}

template <typename T>
void attention_backward(const AttentionGeometry& g, T inv_norm, std::span<const T> q,
                        std::span<const T> k, std::span<const T> v, std::span<const T> attn,
                        std::span<const T> dout, std::span<T> dq, std::span<T> dk,
                        std::span<T> dv) {
  const long P = g.positions;
  std::vector<T> da(P);
  for (int n = 0; n < g.batch; ++n) {
    for (long i = 0; i < P; ++i) {
      const T* arow = attn.data() + (n * P + i) * P;
      for (long j = 0; j < P; ++j) {
        T s = T(0);
        for (int c = 0; c < g.value_channels; ++c) {
          const long base = (long(n) * g.value_channels + c) * P;
          s += dout[base + i] * v[base + j];
          if (!dv.empty()) dv[base + j] += dout[base + i] * arow[j];
        }
        da[j] = s;
      }
      T dot = T(0);
      for (long j = 0; j < P; ++j) dot += arow[j] * da[j];
      for (long j = 0; j < P; ++j) {
        const T ds = arow[j] * (da[j] - dot) * inv_norm;
        for (int c = 0; c < g.key_channels; ++c) {
          const long base = (long(n) * g.key_channels + c) * P;
          if (!dq.empty()) dq[base + i] += ds * k[base + j];
          if (!dk.empty()) dk[base + j] += ds * q[base + i];
        }
      }
    }
  }
}

}  // namespace reference

#define MAM_INSTANTIATE_ATTENTION(T)                                                              \
  template void attention_forward<T>(const AttentionGeometry&, T, std::span<const T>,            \
                                     std::span<const T>, std::span<const T>, std::span<T>,       \
                                     std::span<T>);                                              \
  template void attention_backward<T>(const AttentionGeometry&, T, std::span<const T>,           \
                                      std::span<const T>, std::span<const T>,                    \
                                      std::span<const T>, std::span<const T>, std::span<T>,      \
                                      std::span<T>, std::span<T>);                               \
  template void reference::attention_forward<T>(const AttentionGeometry&, T, std::span<const T>, \
                                                std::span<const T>, std::span<const T>,          \
                                                std::span<T>, std::span<T>);                     \
  template void reference::attention_backward<T>(                                                \
      const AttentionGeometry&, T, std::span<const T>, std::span<const T>, std::span<const T>,  \
      std::span<const T>, std::span<const T>, std::span<T>, std::span<T>, std::span<T>);

MAM_INSTANTIATE_ATTENTION(float)
MAM_INSTANTIATE_ATTENTION(double)

#undef MAM_INSTANTIATE_ATTENTION

}  // namespace mam::kernels
