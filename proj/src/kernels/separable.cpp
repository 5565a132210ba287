#include "mam/kernels/separable.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam::kernels {

namespace {

constexpr double kBinomial[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// Builds a map from per-row (index -> weight) accumulators, merging duplicates
// and keeping indices sorted so application order is fixed.
LinearMap1D from_rows(int in_size, const std::vector<std::map<int, double>>& rows) {
  LinearMap1D m;
  m.in_size = in_size;
  m.out_size = static_cast<int>(rows.size());
  m.row_begin.reserve(rows.size() + 1);
  m.row_begin.push_back(0);
  for (const auto& row : rows) {
    for (const auto& [i, w] : row) {
      if (w == 0.0) continue;
      m.index.push_back(i);
      m.weight.push_back(w);
    }
    m.row_begin.push_back(static_cast<int>(m.index.size()));
  }
  return m;
}

void check_sizes(int in_size, int out_size) {
  if (in_size < 1 || out_size < 1) {
    throw ConfigError(fmt::format("resample: extents must be >= 1 (in {}, out {})", in_size, out_size));
  }
}

}  // namespace

bool LinearMap1D::is_identity() const {
  if (in_size != out_size) return false;
  for (int r = 0; r < out_size; ++r) {
    if (row_begin[r + 1] - row_begin[r] != 1) return false;
    if (index[row_begin[r]] != r || weight[row_begin[r]] != 1.0) return false;
  }
  return true;
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

LinearMap1D bilinear_map(int in_size, int out_size) {
  check_sizes(in_size, out_size);
  std::vector<std::map<int, double>> rows(out_size);
  const double scale = double(in_size) / double(out_size);
  for (int d = 0; d < out_size; ++d) {
    double src = (d + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, double(in_size - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in_size - 1);
    const double f = src - i0;
    rows[d][i0] += 1.0 - f;
    rows[d][i1] += f;
  }
  return from_rows(in_size, rows);
}

LinearMap1D area_map(int in_size, int out_size) {
  check_sizes(in_size, out_size);
  std::vector<std::map<int, double>> rows(out_size);
  const double scale = double(in_size) / double(out_size);
  for (int d = 0; d < out_size; ++d) {
    const double lo = d * scale;
    const double hi = (d + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(in_size - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int i = first; i <= last; ++i) {
      const double overlap = std::min(hi, double(i + 1)) - std::max(lo, double(i));
      if (overlap > 0.0) rows[d][i] += overlap / scale;
    }
  }
  return from_rows(in_size, rows);
}

LinearMap1D pyr_down_map(int in_size) {
  check_sizes(in_size, 1);
  const int out_size = (in_size + 1) / 2;
  std::vector<std::map<int, double>> rows(out_size);
  for (int o = 0; o < out_size; ++o) {
    for (int t = -2; t <= 2; ++t) rows[o][reflect101(2 * o + t, in_size)] += kBinomial[t + 2];
  }
  return from_rows(in_size, rows);
}

LinearMap1D pyr_up_map(int coarse_size, int fine_size) {
  check_sizes(coarse_size, fine_size);
  if (coarse_size != (fine_size + 1) / 2) {
    throw ConfigError(fmt::format("pyr_up: coarse size {} does not match fine size {}", coarse_size,
                                  fine_size));
  }
  std::vector<std::map<int, double>> rows(fine_size);
  for (int o = 0; o < fine_size; ++o) {
    for (int t = -2; t <= 2; ++t) {
      const int j = reflect101(o + t, fine_size);
      if (j % 2 == 0) rows[o][j / 2] += 2.0 * kBinomial[t + 2];
    }
  }
  return from_rows(coarse_size, rows);
}

template <typename T>
void separable_apply(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                     std::span<const T> x, std::span<T> y) {
  const long in_plane = long(rows.in_size) * cols.in_size;
  const long out_plane = long(rows.out_size) * cols.out_size;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* src = x.data() + p * in_plane;
    T* dst = y.data() + p * out_plane;
    std::vector<T> tmp(std::size_t(rows.in_size) * cols.out_size);
    for (int r = 0; r < rows.in_size; ++r) {
      const T* srow = src + long(r) * cols.in_size;
      T* trow = tmp.data() + long(r) * cols.out_size;
      for (int c = 0; c < cols.out_size; ++c) {
        T acc = T(0);
        for (int e = cols.row_begin[c]; e < cols.row_begin[c + 1]; ++e) {
          acc += T(cols.weight[e]) * srow[cols.index[e]];
        }
        trow[c] = acc;
      }
    }
    for (int r = 0; r < rows.out_size; ++r) {
      T* drow = dst + long(r) * cols.out_size;
      std::fill(drow, drow + cols.out_size, T(0));
      for (int e = rows.row_begin[r]; e < rows.row_begin[r + 1]; ++e) {
        const T w = T(rows.weight[e]);
        const T* trow = tmp.data() + long(rows.index[e]) * cols.out_size;
        for (int c = 0; c < cols.out_size; ++c) drow[c] += w * trow[c];
      }
    }
  }
}

template <typename T>
void separable_apply_transpose(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                               std::span<const T> dy, std::span<T> dx) {
  const long in_plane = long(rows.in_size) * cols.in_size;
  const long out_plane = long(rows.out_size) * cols.out_size;
#pragma omp parallel for schedule(static)
  for (int p = 0; p < planes; ++p) {
    const T* g = dy.data() + p * out_plane;
    T* d = dx.data() + p * in_plane;
    std::vector<T> tmp(std::size_t(rows.in_size) * cols.out_size, T(0));
    for (int r = 0; r < rows.out_size; ++r) {
      const T* grow = g + long(r) * cols.out_size;
      for (int e = rows.row_begin[r]; e < rows.row_begin[r + 1]; ++e) {
        const T w = T(rows.weight[e]);
        T* trow = tmp.data() + long(rows.index[e]) * cols.out_size;
        for (int c = 0; c < cols.out_size; ++c) trow[c] += w * grow[c];
      }
    }
    for (int r = 0; r < rows.in_size; ++r) {
      const T* trow = tmp.data() + long(r) * cols.out_size;
      T* drow = d + long(r) * cols.in_size;
      for (int c = 0; c < cols.out_size; ++c) {
        const T v = trow[c];
        for (int e = cols.row_begin[c]; e < cols.row_begin[c + 1]; ++e) {
          drow[cols.index[e]] += T(cols.weight[e]) * v;
        }
      }
    }
  }
}

namespace reference {

template <typename T>
void separable_apply(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                     std::span<const T> x, std::span<T> y) {
  const long in_plane = long(rows.in_size) * cols.in_size;
  const long out_plane = long(rows.out_size) * cols.out_size;
  for (int p = 0; p < planes; ++p) {
    for (int r = 0; r < rows.out_size; ++r) {
      for (int c = 0; c < cols.out_size; ++c) {
        double acc = 0.0;
        for (int er = rows.row_begin[r]; er < rows.row_begin[r + 1]; ++er) {
          for (int ec = cols.row_begin[c]; ec < cols.row_begin[c + 1]; ++ec) {
            acc += rows.weight[er] * cols.weight[ec] *
                   double(x[p * in_plane + long(rows.index[er]) * cols.in_size + cols.index[ec]]);
          }
        }
        y[p * out_plane + long(r) * cols.out_size + c] = T(acc);
      }
    }
  }
}

template <typename T>
void separable_apply_transpose(const LinearMap1D& rows, const LinearMap1D& cols, int planes,
                               std::span<const T> dy, std::span<T> dx) {
  const long in_plane = long(rows.in_size) * cols.in_size;
  const long out_plane = long(rows.out_size) * cols.out_size;
  for (int p = 0; p < planes; ++p) {
    for (int r = 0; r < rows.out_size; ++r) {
      for (int c = 0; c < cols.out_size; ++c) {
        const double g = double(dy[p * out_plane + long(r) * cols.out_size + c]);
        for (int er = rows.row_begin[r]; er < rows.row_begin[r + 1]; ++er) {
          for (int ec = cols.row_begin[c]; ec < cols.row_begin[c + 1]; ++ec) {
            dx[p * in_plane + long(rows.index[er]) * cols.in_size + cols.index[ec]] +=
                T(rows.weight[er] * cols.weight[ec] * g);
          }
        }
      }
    }
  }
}

}  // namespace reference

#define MAM_INSTANTIATE_SEPARABLE(T)                                                              \
  template void separable_apply<T>(const LinearMap1D&, const LinearMap1D&, int,                  \
                                   std::span<const T>, std::span<T>);                            \
  template void separable_apply_transpose<T>(const LinearMap1D&, const LinearMap1D&, int,        \
                                             std::span<const T>, std::span<T>);                  \
  template void reference::separable_apply<T>(const LinearMap1D&, const LinearMap1D&, int,       \
                                              std::span<const T>, std::span<T>);                 \
  template void reference::separable_apply_transpose<T>(const LinearMap1D&, const LinearMap1D&,  \
                                                        int, std::span<const T>, std::span<T>);

MAM_INSTANTIATE_SEPARABLE(float)
MAM_INSTANTIATE_SEPARABLE(double)

#undef MAM_INSTANTIATE_SEPARABLE

}  // namespace mam::kernels
