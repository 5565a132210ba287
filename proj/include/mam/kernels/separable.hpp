#pragma once

#include <span>
#include <vector>

namespace mam::kernels {

/// Sparse linear map from a 1-D signal of length `in_size` to one of length
/// `out_size`, stored row-compressed. Resampling, area averaging and the
/// pyramid blur/decimate steps are all separable, so a 2-D operator is a pair
/// of these applied along rows and columns.
struct LinearMap1D {
  int in_size = 0;
  int out_size = 0;
  std::vector<int> row_begin;  // out_size + 1 entries
  std::vector<int> index;
  std::vector<double> weight;

  [[nodiscard]] bool is_identity() const;
};

/// Bilinear sampling with half-pixel centers: src = (dst + 0.5) * in/out - 0.5,
/// clamped to [0, in-1].
LinearMap1D bilinear_map(int in_size, int out_size);

/// Box-filter coverage weights: each output cell averages the input interval
/// it covers, with fractional overlap at the cell ends.
LinearMap1D area_map(int in_size, int out_size);

/// Binomial [1,4,6,4,1]/16 blur followed by keeping even samples; output length
/// ceil(in/2). Borders reflect-101.
LinearMap1D pyr_down_map(int in_size);

/// Zero-insertion to `fine_size` samples followed by the same blur scaled by 2.
/// Requires coarse_size == ceil(fine_size / 2).
LinearMap1D pyr_up_map(int coarse_size, int fine_size);

/// Reflect-101 border index (…2 1 | 0 1 2 … n-1 | n-2 …).
int reflect101(int i, int n);

/// y[p] = R · x[p] · Cᵀ for every plane p (y overwritten).
/// x is planes × rows.in_size × cols.in_size, y is planes × rows.out_size × cols.out_size.
template <typename T>
void separable_apply(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                     std::span<const T> x, std::span<T> y);

/// dx[p] += Rᵀ · dy[p] · C (adjoint of separable_apply).
template <typename T>
void separable_apply_transpose(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                               std::span<const T> dy, std::span<T> dx);

namespace reference {

template <typename T>
void separable_apply(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                     std::span<const T> x, std::span<T> y);
template <typename T>
void separable_apply_transpose(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                               std::span<const T> dy, std::span<T> dx);

}  // namespace reference

}  // namespace mam::kernels
