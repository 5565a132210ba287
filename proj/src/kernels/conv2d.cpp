#include "mam/kernels/conv2d.hpp"

#include <algorithm>
#include <array>
#include <string>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam::kernels {

namespace {

// Output positions o with 0 <= o*stride - pad + k < n_in.
void valid_range(int n_out, int n_in, int stride, int pad, int k, int& lo, int& hi) {
  const int a = pad - k;
  lo = a > 0 ? (a + stride - 1) / stride : 0;
  const int b = n_in - 1 + pad - k;
  hi = b < 0 ? 0 : std::min(n_out, b / stride + 1);
  if (hi < lo) hi = lo;
}

}  // namespace

Conv2dGeometry make_conv2d_geometry(int batch, int in_channels, int in_h, int in_w, int out_channels,
                                    int kernel, int stride, int padding) {
  if (kernel <= 0 || kernel % 2 == 0) {
    throw ConfigError(fmt::format("conv2d: kernel size must be odd and positive, got {}", kernel));
  }
  if (stride <= 0) throw ConfigError(fmt::format("conv2d: stride must be positive, got {}", stride));
  if (padding < 0) throw ConfigError(fmt::format("conv2d: padding must be >= 0, got {}", padding));
  const int span_h = in_h + 2 * padding - kernel;
  const int span_w = in_w + 2 * padding - kernel;
  // Strided extents round down (the trailing partial window is dropped).
  if (span_h < 0 || span_w < 0) {
    throw ConfigError(fmt::format(
        "conv2d: kernel {} does not fit input {}x{} with padding {}", kernel, in_h, in_w, padding));
  }
  Conv2dGeometry g;
  g.batch = batch;
  g.in_channels = in_channels;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_channels = out_channels;
  g.kernel = kernel;
  g.stride = stride;
  g.padding = padding;
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;
  return g;
}

template <typename T>
void conv2d_forward(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> w,
                    std::span<const T> b, std::span<T> y) {
  const int K = g.kernel;
  const long in_plane = long(g.in_h) * g.in_w;
  const long out_plane = long(g.out_h) * g.out_w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      T* out = y.data() + (long(n) * g.out_channels + co) * out_plane;
      const T bias = b.empty() ? T(0) : b[co];
      std::fill(out, out + out_plane, bias);
      for (int ci = 0; ci < g.in_channels; ++ci) {
        const T* in = x.data() + (long(n) * g.in_channels + ci) * in_plane;
        const T* wk = w.data() + (long(co) * g.in_channels + ci) * K * K;
        for (int ky = 0; ky < K; ++ky) {
          int oy_lo, oy_hi;
          valid_range(g.out_h, g.in_h, g.stride, g.padding, ky, oy_lo, oy_hi);
          for (int kx = 0; kx < K; ++kx) {
            const T wv = wk[ky * K + kx];
            int ox_lo, ox_hi;
            valid_range(g.out_w, g.in_w, g.stride, g.padding, kx, ox_lo, ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const long iy = long(oy) * g.stride - g.padding + ky;
              const T* in_row = in + iy * g.in_w;
              T* out_row = out + long(oy) * g.out_w;
              if (g.stride == 1) {
                const T* src = in_row + (kx - g.padding);
                for (int ox = ox_lo; ox < ox_hi; ++ox) out_row[ox] += wv * src[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) {
                  out_row[ox] += wv * in_row[long(ox) * g.stride - g.padding + kx];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const Conv2dGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx) {
  const int K = g.kernel;
  const long in_plane = long(g.in_h) * g.in_w;
  const long out_plane = long(g.out_h) * g.out_w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.batch; ++n) {
    for (int ci = 0; ci < g.in_channels; ++ci) {
      T* din = dx.data() + (long(n) * g.in_channels + ci) * in_plane;
      for (int co = 0; co < g.out_channels; ++co) {
        const T* dout = dy.data() + (long(n) * g.out_channels + co) * out_plane;
        const T* wk = w.data() + (long(co) * g.in_channels + ci) * K * K;
        for (int ky = 0; ky < K; ++ky) {
          int oy_lo, oy_hi;
          valid_range(g.out_h, g.in_h, g.stride, g.padding, ky, oy_lo, oy_hi);
          for (int kx = 0; kx < K; ++kx) {
            const T wv = wk[ky * K + kx];
            int ox_lo, ox_hi;
            valid_range(g.out_w, g.in_w, g.stride, g.padding, kx, ox_lo, ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const long iy = long(oy) * g.stride - g.padding + ky;
              T* din_row = din + iy * g.in_w;
              const T* dout_row = dout + long(oy) * g.out_w;
              if (g.stride == 1) {
                T* dst = din_row + (kx - g.padding);
                for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox] += wv * dout_row[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) {
                  din_row[long(ox) * g.stride - g.padding + kx] += wv * dout_row[ox];
                }
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_params(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw, std::span<T> db) {
  constexpr int kLanes = 8;
  const int K = g.kernel;
  const long in_plane = long(g.in_h) * g.in_w;
  const long out_plane = long(g.out_h) * g.out_w;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < g.out_channels; ++co) {
    if (!db.empty()) {
      std::array<T, kLanes> lanes{};
      for (int n = 0; n < g.batch; ++n) {
        const T* dout = dy.data() + (long(n) * g.out_channels + co) * out_plane;
        long i = 0;
        for (; i + kLanes <= out_plane; i += kLanes) {
          for (int j = 0; j < kLanes; ++j) lanes[j] += dout[i + j];
        }
        for (; i < out_plane; ++i) lanes[0] += dout[i];
      }
      db[co] += ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    }
    for (int ci = 0; ci < g.in_channels; ++ci) {
      T* wk = dw.data() + (long(co) * g.in_channels + ci) * K * K;
      for (int ky = 0; ky < K; ++ky) {
        int oy_lo, oy_hi;
        valid_range(g.out_h, g.in_h, g.stride, g.padding, ky, oy_lo, oy_hi);
        for (int kx = 0; kx < K; ++kx) {
          int ox_lo, ox_hi;
          valid_range(g.out_w, g.in_w, g.stride, g.padding, kx, ox_lo, ox_hi);
          std::array<T, kLanes> lanes{};
          for (int n = 0; n < g.batch; ++n) {
            const T* in = x.data() + (long(n) * g.in_channels + ci) * in_plane;
            const T* dout = dy.data() + (long(n) * g.out_channels + co) * out_plane;
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const long iy = long(oy) * g.stride - g.padding + ky;
              const T* in_row = in + iy * g.in_w;
              const T* dout_row = dout + long(oy) * g.out_w;
              int ox = ox_lo;
              if (g.stride == 1) {
                const T* src = in_row + (kx - g.padding);
                for (; ox + kLanes <= ox_hi; ox += kLanes) {
                  for (int j = 0; j < kLanes; ++j) lanes[j] += dout_row[ox + j] * src[ox + j];
                }
                for (; ox < ox_hi; ++ox) lanes[0] += dout_row[ox] * src[ox];
              } else {
                for (; ox < ox_hi; ++ox) {
                  lanes[0] += dout_row[ox] * in_row[long(ox) * g.stride - g.padding + kx];
                }
              }
            }
          }
          wk[ky * K + kx] += ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                             ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
        }
      }
    }
  }
}

namespace reference {

template <typename T>
void conv2d_forward(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> w,
                    std::span<const T> b, std::span<T> y) {
  const int K = g.kernel;
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          T acc = b.empty() ? T(0) : b[co];
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ky = 0; ky < K; ++ky) {
              const int iy = oy * g.stride - g.padding + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < K; ++kx) {
                const int ix = ox * g.stride - g.padding + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += w[((long(co) * g.in_channels + ci) * K + ky) * K + kx] *
                       x[((long(n) * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
          y[((long(n) * g.out_channels + co) * g.out_h + oy) * g.out_w + ox] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const Conv2dGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx) {
  const int K = g.kernel;
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          const T d = dy[((long(n) * g.out_channels + co) * g.out_h + oy) * g.out_w + ox];
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ky = 0; ky < K; ++ky) {
              const int iy = oy * g.stride - g.padding + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < K; ++kx) {
                const int ix = ox * g.stride - g.padding + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                dx[((long(n) * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix] +=
                    w[((long(co) * g.in_channels + ci) * K + ky) * K + kx] * d;
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_params(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw, std::span<T> db) {
  const int K = g.kernel;
  for (int n = 0; n < g.batch; ++n) {
    for (int co = 0; co < g.out_channels; ++co) {
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          const T d = dy[((long(n) * g.out_channels + co) * g.out_h + oy) * g.out_w + ox];
          if (!db.empty()) db[co] += d;
          for (int ci = 0; ci < g.in_channels; ++ci) {
            for (int ky = 0; ky < K; ++ky) {
              const int iy = oy * g.stride - g.padding + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < K; ++kx) {
                const int ix = ox * g.stride - g.padding + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                dw[((long(co) * g.in_channels + ci) * K + ky) * K + kx] +=
                    d * x[((long(n) * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace reference

#define MAM_INSTANTIATE_CONV(T)                                                                   \
  template void conv2d_forward<T>(const Conv2dGeometry&, std::span<const T>, std::span<const T>, \
                                  std::span<const T>, std::span<T>);                             \
  template void conv2d_backward_input<T>(const Conv2dGeometry&, std::span<const T>,               \
                                         std::span<const T>, std::span<T>);                      \
  template void conv2d_backward_params<T>(const Conv2dGeometry&, std::span<const T>,              \
                                          std::span<const T>, std::span<T>, std::span<T>);       \
  template void reference::conv2d_forward<T>(const Conv2dGeometry&, std::span<const T>,           \
                                             std::span<const T>, std::span<const T>,             \
                                             std::span<T>);                                      \
  template void reference::conv2d_backward_input<T>(const Conv2dGeometry&, std::span<const T>,    \
                                                    std::span<const T>, std::span<T>);           \
  template void reference::conv2d_backward_params<T>(const Conv2dGeometry&, std::span<const T>,   \
                                                     std::span<const T>, std::span<T>,           \
                                                     std::span<T>);

MAM_INSTANTIATE_CONV(float)
MAM_INSTANTIATE_CONV(double)

#undef MAM_INSTANTIATE_CONV

}  // namespace mam::kernels
