#pragma once

#include <span>

namespace mam::kernels {

// Geometry of a batched NCHW cross-correlation with a square kernel.
struct Conv2dGeometry {
  int batch = 1;
  int in_channels = 0;
  int in_h = 0;
  int in_w = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int out_h = 0;
  int out_w = 0;

  [[nodiscard]] long input_size() const { return long(batch) * in_channels * in_h * in_w; }
  [[nodiscard]] long output_size() const { return long(batch) * out_channels * out_h * out_w; }
  [[nodiscard]] long weight_size() const { return long(out_channels) * in_channels * kernel * kernel; }
};

// Fills out_h/out_w = floor((in + 2·padding − kernel) / stride) + 1. Throws
// ConfigError for an even kernel or a kernel larger than the padded input.
Conv2dGeometry make_conv2d_geometry(int batch, int in_channels, int in_h, int in_w, int out_channels,
                                    int kernel, int stride, int padding);

// OpenMP kernels. Every output element is owned by exactly one thread and is
// accumulated in a fixed order, so results do not depend on the thread count.
//
// forward overwrites y; the backward kernels accumulate (+=) into dx / dw / db.
template <typename T>
void conv2d_forward(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> w,
                    std::span<const T> b, std::span<T> y);
template <typename T>
void conv2d_backward_input(const Conv2dGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx);
template <typename T>
void conv2d_backward_params(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw, std::span<T> db);

namespace reference {

// Serial per-output-pixel loops. Kept for tests and benchmarks.
template <typename T>
void conv2d_forward(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> w,
                    std::span<const T> b, std::span<T> y);
template <typename T>
void conv2d_backward_input(const Conv2dGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx);
template <typename T>
void conv2d_backward_params(const Conv2dGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw, std::span<T> db);

}  // namespace reference

}  // namespace mam::kernels
