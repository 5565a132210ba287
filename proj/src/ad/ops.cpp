#include "mam/ad/ops.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mam/errors.hpp"
#include "mam/kernels/attention.hpp"
#include "mam/kernels/conv2d.hpp"

namespace mam::ad {

using detail::Node;

Nchw as_nchw(const Shape& shape, const char* op) {
  if (shape.size() == 4) return {shape[0], shape[1], shape[2], shape[3]};
  if (shape.size() == 3) return {1, shape[0], shape[1], shape[2]};
  throw ShapeError(fmt::format("{}: expected C×H×W or N×C×H×W, got {}", op, shape_str(shape)));
}

namespace {

Shape with_nchw(const Shape& like, int n, int c, int h, int w) {
  if (like.size() == 3) return {c, h, w};
  return {n, c, h, w};
}

template <typename T>
bool wants_grad(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, shape_str(a.shape()),
                                 shape_str(b.shape())));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding) {
  const auto d = as_nchw(input.shape(), "conv2d");
  if (weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
    throw ShapeError(fmt::format("conv2d: weight must be Cout×Cin×k×k, got {}", shape_str(weight.shape())));
  }
  if (weight.dim(1) != d.c) {
    throw ShapeError(fmt::format("conv2d: input has {} channels but weight {} expects {}", d.c,
                                 shape_str(weight.shape()), weight.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    throw ShapeError(fmt::format("conv2d: bias {} does not match {} output channels",
                                 shape_str(bias.shape()), weight.dim(0)));
  }
  const auto g = kernels::make_conv2d_geometry(d.n, d.c, d.h, d.w, weight.dim(0), weight.dim(2),
                                               stride, padding);
  std::vector<T> out(static_cast<std::size_t>(g.output_size()));
  const std::span<const T> no_bias;
  kernels::conv2d_forward<T>(g, input.values(), weight.values(),
                             bias.defined() ? bias.values() : no_bias, out);
  return make_result<T>(with_nchw(input.shape(), g.batch, g.out_channels, g.out_h, g.out_w),
                        std::move(out), {input, weight, bias},
                        [input, weight, bias, g](Node<T>& self) {
                          if (wants_grad(input)) {
                            input.node()->ensure_grad();
                            kernels::conv2d_backward_input<T>(g, weight.values(), self.grad,
                                                              input.node()->grad);
                          }
                          if (wants_grad(weight) || wants_grad(bias)) {
                            weight.node()->ensure_grad();
                            std::span<T> db;
                            if (bias.defined()) {
                              bias.node()->ensure_grad();
                              db = bias.node()->grad;
                            }
                            kernels::conv2d_backward_params<T>(g, input.values(), self.grad,
                                                               weight.node()->grad, db);
                          }
                        });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T eps,
                     T momentum) {
  if (!(eps > T(0))) throw ConfigError(fmt::format("batch_norm: eps must be > 0, got {}", eps));
  const auto d = as_nchw(input.shape(), "batch_norm");
  const std::initializer_list<const Tensor<T>*> per_channel{&gamma, &beta, &running_mean,
                                                             &running_var};
  for (const Tensor<T>* t : per_channel) {
    if (t->rank() != 1 || t->dim(0) != d.c) {
      throw ShapeError(fmt::format("batch_norm: per-channel tensor {} does not match {} channels",
                                   shape_str(t->shape()), d.c));
    }
  }
  const long plane = long(d.h) * d.w;
  const long count = long(d.n) * plane;
  std::vector<T> out(input.numel());
  std::vector<T> xhat(input.numel());
  std::vector<T> inv_std(d.c);
  const auto x = input.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  auto rm = running_mean.mutable_values();
  auto rv = running_var.mutable_values();

#pragma omp parallel for schedule(static)
  for (int c = 0; c < d.c; ++c) {
    double mu;
    double var;
    if (training) {
      double s = 0.0;
      for (int n = 0; n < d.n; ++n) {
        const T* p = x.data() + (long(n) * d.c + c) * plane;
        for (long i = 0; i < plane; ++i) s += p[i];
      }
      mu = s / double(count);
      double ss = 0.0;
      for (int n = 0; n < d.n; ++n) {
        const T* p = x.data() + (long(n) * d.c + c) * plane;
        for (long i = 0; i < plane; ++i) {
          const double dv = p[i] - mu;
          ss += dv * dv;
        }
      }
      var = ss / double(count);
      const double unbiased = count > 1 ? ss / double(count - 1) : var;
      rm[c] = T((1.0 - double(momentum)) * rm[c] + double(momentum) * mu);
      rv[c] = T((1.0 - double(momentum)) * rv[c] + double(momentum) * unbiased);
    } else {
      mu = rm[c];
      var = rv[c];
    }
    const T istd = T(1.0 / std::sqrt(var + double(eps)));
    inv_std[c] = istd;
    const T m = T(mu);
    for (int n = 0; n < d.n; ++n) {
      const long base = (long(n) * d.c + c) * plane;
      for (long i = 0; i < plane; ++i) {
        const T xh = (x[base + i] - m) * istd;
        xhat[base + i] = xh;
        out[base + i] = gv[c] * xh + bv[c];
      }
    }
  }

  return make_result<T>(
      input.shape(), std::move(out), {input, gamma, beta},
      [input, gamma, beta, d, plane, count, training, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Node<T>& self) {
        const auto& dy = self.grad;
        const bool need_x = wants_grad(input);
        if (need_x) input.node()->ensure_grad();
        if (wants_grad(gamma)) gamma.node()->ensure_grad();
        if (wants_grad(beta)) beta.node()->ensure_grad();
        const auto gv = gamma.values();
#pragma omp parallel for schedule(static)
        for (int c = 0; c < d.c; ++c) {
          double sdy = 0.0;
          double sdyx = 0.0;
          for (int n = 0; n < d.n; ++n) {
            const long base = (long(n) * d.c + c) * plane;
            for (long i = 0; i < plane; ++i) {
              sdy += dy[base + i];
              sdyx += double(dy[base + i]) * xhat[base + i];
            }
          }
          if (wants_grad(gamma)) gamma.node()->grad[c] += T(sdyx);
          if (wants_grad(beta)) beta.node()->grad[c] += T(sdy);
          if (!need_x) continue;
          auto& dx = input.node()->grad;
          const T k = gv[c] * inv_std[c];
          if (training) {
            const T mdy = T(sdy / double(count));
            const T mdyx = T(sdyx / double(count));
            for (int n = 0; n < d.n; ++n) {
              const long base = (long(n) * d.c + c) * plane;
              for (long i = 0; i < plane; ++i) {
                dx[base + i] += k * (dy[base + i] - mdy - xhat[base + i] * mdyx);
              }
            }
          } else {
            for (int n = 0; n < d.n; ++n) {
              const long base = (long(n) * d.c + c) * plane;
              for (long i = 0; i < plane; ++i) dx[base + i] += k * dy[base + i];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope) {
  const auto x = input.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : slope * x[i];
  return make_result<T>(input.shape(), std::move(out), {input}, [input, slope](Node<T>& self) {
    input.node()->ensure_grad();
    auto& dx = input.node()->grad;
    const auto x = input.values();
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] += (x[i] > T(0) ? T(1) : slope) * self.grad[i];
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  const auto x = input.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Stable in both tails.
    if (x[i] >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-x[i]));
    } else {
      const T e = std::exp(x[i]);
      out[i] = e / (T(1) + e);
    }
  }
  auto y = out;
  return make_result<T>(input.shape(), std::move(out), {input},
                        [input, y = std::move(y)](Node<T>& self) {
                          input.node()->ensure_grad();
                          auto& dx = input.node()->grad;
                          for (std::size_t i = 0; i < y.size(); ++i) {
                            dx[i] += y[i] * (T(1) - y[i]) * self.grad[i];
                          }
                        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [a, b](Node<T>& self) {
    for (const Tensor<T>* t : {&a, &b}) {
      if (!wants_grad(*t)) continue;
      t->node()->ensure_grad();
      auto& g = t->node()->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (wants_grad(a)) {
      a.node()->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a.node()->grad[i] += self.grad[i];
    }
    if (wants_grad(b)) {
      b.node()->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) b.node()->grad[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (wants_grad(a)) {
      a.node()->ensure_grad();
      const auto bv = b.values();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a.node()->grad[i] += self.grad[i] * bv[i];
    }
    if (wants_grad(b)) {
      b.node()->ensure_grad();
      const auto av = a.values();
      for (std::size_t i = 0; i < self.grad.size(); ++i) b.node()->grad[i] += self.grad[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return make_result<T>(a.shape(), std::move(out), {a}, [a, factor](Node<T>& self) {
    a.node()->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) a.node()->grad[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, const Tensor<T>& s) {
  if (s.numel() != 1) {
    throw ShapeError(fmt::format("mul_scalar: factor must hold one value, got {}", shape_str(s.shape())));
  }
  const T f = s.values()[0];
  std::vector<T> out(a.numel());
  const auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * f;
  return make_result<T>(a.shape(), std::move(out), {a, s}, [a, s](Node<T>& self) {
    const T f = s.values()[0];
    if (wants_grad(a)) {
      a.node()->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a.node()->grad[i] += self.grad[i] * f;
    }
    if (wants_grad(s)) {
      s.node()->ensure_grad();
      const auto av = a.values();
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * av[i];
      s.node()->grad[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (T v : a.values()) acc += v;
  return make_result<T>(Shape{1}, {acc}, {a}, [a](Node<T>& self) {
    a.node()->ensure_grad();
    const T g = self.grad[0];
    for (auto& v : a.node()->grad) v += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / T(a.numel()));
}

template <typename T>
Tensor<T> abs_sum_per_sample(const Tensor<T>& x, const std::vector<T>& scales) {
  const int n = x.dim(0);
  if (static_cast<int>(scales.size()) != n) {
    throw ShapeError(fmt::format("abs_sum_per_sample: {} scales for batch of {}", scales.size(), n));
  }
  const std::size_t per = x.numel() / static_cast<std::size_t>(n);
  const auto xv = x.values();
  T total = T(0);
  for (int b = 0; b < n; ++b) {
    T acc = T(0);
    for (std::size_t i = 0; i < per; ++i) acc += std::abs(xv[b * per + i]);
    total += scales[b] * acc;
  }
  return make_result<T>(Shape{1}, {total}, {x}, [x, scales, per](Node<T>& self) {
    x.node()->ensure_grad();
    auto& dx = x.node()->grad;
    const auto xv = x.values();
    const T g = self.grad[0];
    for (std::size_t b = 0; b < scales.size(); ++b) {
      const T k = g * scales[b];
      for (std::size_t i = 0; i < per; ++i) {
        const T v = xv[b * per + i];
        dx[b * per + i] += v > T(0) ? k : (v < T(0) ? -k : T(0));
      }
    }
  });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  const auto d0 = as_nchw(inputs[0].shape(), "concat_channels");
  int channels = 0;
  for (const auto& t : inputs) {
    const auto d = as_nchw(t.shape(), "concat_channels");
    if (d.n != d0.n || d.h != d0.h || d.w != d0.w || t.rank() != inputs[0].rank()) {
      throw ShapeError(fmt::format("concat_channels: {} does not match {}", shape_str(t.shape()),
                                   shape_str(inputs[0].shape())));
    }
    channels += d.c;
  }
  const long plane = long(d0.h) * d0.w;
  std::vector<T> out(std::size_t(d0.n) * channels * plane);
  int offset = 0;
  for (const auto& t : inputs) {
    const int c = as_nchw(t.shape(), "concat_channels").c;
    const auto v = t.values();
    for (int n = 0; n < d0.n; ++n) {
      std::copy_n(v.data() + long(n) * c * plane, c * plane,
                  out.data() + (long(n) * channels + offset) * plane);
    }
    offset += c;
  }
  return make_result<T>(with_nchw(inputs[0].shape(), d0.n, channels, d0.h, d0.w), std::move(out),
                        inputs, [inputs, channels, plane, batch = d0.n](Node<T>& self) {
                          int offset = 0;
                          for (const auto& t : inputs) {
                            const int c = as_nchw(t.shape(), "concat_channels").c;
                            if (wants_grad(t)) {
                              t.node()->ensure_grad();
                              auto& g = t.node()->grad;
                              for (int n = 0; n < batch; ++n) {
                                const T* src = self.grad.data() + (long(n) * channels + offset) * plane;
                                T* dst = g.data() + long(n) * c * plane;
                                for (long i = 0; i < c * plane; ++i) dst[i] += src[i];
                              }
                            }
                            offset += c;
                          }
                        });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int count) {
  const auto d = as_nchw(input.shape(), "slice_channels");
  if (begin < 0 || count < 1 || begin + count > d.c) {
    throw ShapeError(fmt::format("slice_channels: [{}, {}) out of range for {} channels", begin,
                                 begin + count, d.c));
  }
  const long plane = long(d.h) * d.w;
  std::vector<T> out(std::size_t(d.n) * count * plane);
  const auto v = input.values();
  for (int n = 0; n < d.n; ++n) {
    std::copy_n(v.data() + (long(n) * d.c + begin) * plane, count * plane,
                out.data() + long(n) * count * plane);
  }
  return make_result<T>(with_nchw(input.shape(), d.n, count, d.h, d.w), std::move(out), {input},
                        [input, d, begin, count, plane](Node<T>& self) {
                          input.node()->ensure_grad();
                          auto& g = input.node()->grad;
                          for (int n = 0; n < d.n; ++n) {
                            const T* src = self.grad.data() + long(n) * count * plane;
                            T* dst = g.data() + (long(n) * d.c + begin) * plane;
                            for (long i = 0; i < count * plane; ++i) dst[i] += src[i];
                          }
                        });
}

template <typename T>
Tensor<T> resample(const Tensor<T>& input, const kernels::LinearMap1D& rows,
                   const kernels::LinearMap1D& cols) {
  const auto d = as_nchw(input.shape(), "resample");
  if (rows.in_size != d.h || cols.in_size != d.w) {
    throw ShapeError(fmt::format("resample: operator expects {}x{} planes, input is {}", rows.in_size,
                                 cols.in_size, shape_str(input.shape())));
  }
  const int planes = d.n * d.c;
  std::vector<T> out(std::size_t(planes) * rows.out_size * cols.out_size);
  kernels::separable_apply<T>(rows, cols, planes, input.values(), out);
  return make_result<T>(with_nchw(input.shape(), d.n, d.c, rows.out_size, cols.out_size),
                        std::move(out), {input}, [input, rows, cols, planes](Node<T>& self) {
                          input.node()->ensure_grad();
                          kernels::separable_apply_transpose<T>(rows, cols, planes, self.grad,
                                                                input.node()->grad);
                        });
}

template <typename T>
Tensor<T> resample_bilinear(const Tensor<T>& input, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ConfigError(fmt::format("resample_bilinear: target extent {}x{} is below 1", out_h, out_w));
  }
  const auto d = as_nchw(input.shape(), "resample_bilinear");
  return resample(input, kernels::bilinear_map(d.h, out_h), kernels::bilinear_map(d.w, out_w));
}

template <typename T>
Tensor<T> resample_bilinear_scale(const Tensor<T>& input, int num, int den) {
  if (num < 1 || den < 1) throw ConfigError(fmt::format("resample: invalid scale {}/{}", num, den));
  const auto d = as_nchw(input.shape(), "resample_bilinear_scale");
  if ((long(d.h) * num) % den != 0 || (long(d.w) * num) % den != 0) {
    throw ConfigError(fmt::format("resample: {}x{} scaled by {}/{} is not integral", d.h, d.w, num, den));
  }
  return resample_bilinear(input, int(long(d.h) * num / den), int(long(d.w) * num / den));
}

template <typename T>
Tensor<T> resample_area(const Tensor<T>& input, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ConfigError(fmt::format("resample_area: target extent {}x{} is below 1", out_h, out_w));
  }
  const auto d = as_nchw(input.shape(), "resample_area");
  return resample(input, kernels::area_map(d.h, out_h), kernels::area_map(d.w, out_w));
}

namespace {

template <typename T>
kernels::AttentionGeometry attention_geometry(const Tensor<T>& query, const Tensor<T>& key,
                                              const Tensor<T>* value) {
  const auto dq = as_nchw(query.shape(), "spatial_attention");
  const auto dk = as_nchw(key.shape(), "spatial_attention");
  if (dq.n != dk.n || dq.c != dk.c || dq.h != dk.h || dq.w != dk.w) {
    throw ShapeError(fmt::format("spatial_attention: query {} and key {} differ",
                                 shape_str(query.shape()), shape_str(key.shape())));
  }
  kernels::AttentionGeometry g;
  g.batch = dq.n;
  g.key_channels = dq.c;
  g.positions = dq.h * dq.w;
  g.value_channels = 0;
  if (value != nullptr) {
    const auto dv = as_nchw(value->shape(), "spatial_attention");
    if (dv.n != dq.n || dv.h != dq.h || dv.w != dq.w) {
      throw ShapeError(fmt::format("spatial_attention: value {} does not match query {}",
                                   shape_str(value->shape()), shape_str(query.shape())));
    }
    g.value_channels = dv.c;
  }
  return g;
}

}  // namespace

template <typename T>
Tensor<T> spatial_attention(const Tensor<T>& query, const Tensor<T>& key, const Tensor<T>& value,
                            T inv_norm) {
  const auto g = attention_geometry(query, key, &value);
  std::vector<T> attn(std::size_t(g.batch) * g.positions * g.positions);
  std::vector<T> out(value.numel());
  kernels::attention_forward<T>(g, inv_norm, query.values(), key.values(), value.values(), attn, out);
  return make_result<T>(value.shape(), std::move(out), {query, key, value},
                        [query, key, value, g, inv_norm, attn = std::move(attn)](Node<T>& self) {
                          std::span<T> dq, dk, dv;
                          if (wants_grad(query)) {
                            query.node()->ensure_grad();
                            dq = query.node()->grad;
                          }
                          if (wants_grad(key)) {
                            key.node()->ensure_grad();
                            dk = key.node()->grad;
                          }
                          if (wants_grad(value)) {
                            value.node()->ensure_grad();
                            dv = value.node()->grad;
                          }
                          kernels::attention_backward<T>(g, inv_norm, query.values(), key.values(),
                                                         value.values(), attn, self.grad, dq, dk, dv);
                        });
}

template <typename T>
Tensor<T> attention_weights(const Tensor<T>& query, const Tensor<T>& key, T inv_norm) {
  auto g = attention_geometry<T>(query, key, nullptr);
  g.value_channels = 1;
  std::vector<T> attn(std::size_t(g.batch) * g.positions * g.positions);
  std::vector<T> zeros(std::size_t(g.batch) * g.positions, T(0));
  std::vector<T> out(zeros.size());
  kernels::attention_forward<T>(g, inv_norm, query.values(), key.values(),
                                std::span<const T>(zeros), attn, out);
  return Tensor<T>(Shape{g.batch, g.positions, g.positions}, std::vector<T>(std::move(attn)));
}

#define MAM_INSTANTIATE_OPS(T)                                                                    \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);   \
  template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                   Tensor<T>&, Tensor<T>&, bool, T, T);                          \
  template Tensor<T> leaky_relu<T>(const Tensor<T>&, T);                                          \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                                \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                               \
  template Tensor<T> mul_scalar<T>(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                    \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                   \
  template Tensor<T> abs_sum_per_sample<T>(const Tensor<T>&, const std::vector<T>&);              \
  template Tensor<T> concat_channels<T>(const std::vector<Tensor<T>>&);                           \
  template Tensor<T> slice_channels<T>(const Tensor<T>&, int, int);                               \
  template Tensor<T> resample<T>(const Tensor<T>&, const kernels::LinearMap1D&,                   \
                                 const kernels::LinearMap1D&);                                    \
  template Tensor<T> resample_bilinear<T>(const Tensor<T>&, int, int);                            \
  template Tensor<T> resample_bilinear_scale<T>(const Tensor<T>&, int, int);                      \
  template Tensor<T> resample_area<T>(const Tensor<T>&, int, int);                                \
  template Tensor<T> spatial_attention<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> attention_weights<T>(const Tensor<T>&, const Tensor<T>&, T);

MAM_INSTANTIATE_OPS(float)
MAM_INSTANTIATE_OPS(double)

#undef MAM_INSTANTIATE_OPS

}  // namespace mam::ad
