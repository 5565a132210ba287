#include "mam/core/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam {

namespace {

constexpr double kFar = 1e20;

template <typename A, typename B>
void require_same(const Grid<A>& a, const Grid<B>& b, const char* op) {
  if (!a.same_extent(b)) {
    throw ShapeError(fmt::format("{}: extents {}x{} and {}x{} differ", op, a.width, a.height,
                                 b.width, b.height));
  }
}

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place on f.
void distance_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = int(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = 0.0;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
  f.swap(d);
}

}  // namespace

BinaryMask binarize(const AlphaMatte& alpha, double threshold) {
  BinaryMask m(alpha.width, alpha.height);
  for (std::size_t i = 0; i < alpha.size(); ++i) m.data[i] = alpha.data[i] >= threshold ? 1 : 0;
  return m;
}

Plane squared_distance_to(const BinaryMask& mask) {
  const int w = mask.width;
  const int h = mask.height;
  Plane out(w, h);
  if (mask.empty()) return out;
  const int longest = std::max(w, h);
  std::vector<double> f, d(longest);
  std::vector<int> v(longest);
  std::vector<double> z(longest + 1);
  for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = mask.data[i] ? 0.0 : kFar;
  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = out(x, y);
    distance_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) out(x, y) = f[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = out(x, y);
    distance_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) out(x, y) = f[x];
  }
  for (double& val : out.data)
    if (val >= kFar * 0.5) val = std::numeric_limits<double>::infinity();
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw ConfigError(fmt::format("dilate: radius {} is negative", radius));
  if (radius == 0) return mask;
  const Plane d = squared_distance_to(mask);
  const double r2 = double(radius) * radius;
  BinaryMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < d.size(); ++i) out.data[i] = d.data[i] <= r2 ? 1 : 0;
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius < 0) throw ConfigError(fmt::format("erode: radius {} is negative", radius));
  if (radius == 0) return mask;
  BinaryMask inv(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) inv.data[i] = mask.data[i] ? 0 : 1;
  const BinaryMask grown = dilate(inv, radius);
  BinaryMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = grown.data[i] ? 0 : 1;
  return out;
}

BinaryMask boundary(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const auto v = mask(x, y);
      const bool edge = (x > 0 && mask(x - 1, y) != v) || (x + 1 < mask.width && mask(x + 1, y) != v) ||
                        (y > 0 && mask(x, y - 1) != v) || (y + 1 < mask.height && mask(x, y + 1) != v);
      out(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

BinaryMask transition_band(const AlphaMatte& alpha, int radius, double lo, double hi) {
  if (!(0.0 <= lo && lo < hi && hi <= 1.0)) {
    throw ConfigError(fmt::format("transition_band: need 0 <= lo < hi <= 1, got {} and {}", lo, hi));
  }
  // -1 low, 0 fractional, +1 high.
  Grid<int> cls(alpha.width, alpha.height);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double a = alpha.data[i];
    cls.data[i] = a <= lo ? -1 : (a >= hi ? 1 : 0);
  }
  BinaryMask seed(alpha.width, alpha.height);
  for (int y = 0; y < alpha.height; ++y) {
    for (int x = 0; x < alpha.width; ++x) {
      const int c = cls(x, y);
      bool on = c == 0;
      if (!on) {
        on = (x > 0 && cls(x - 1, y) == -c) || (x + 1 < alpha.width && cls(x + 1, y) == -c) ||
             (y > 0 && cls(x, y - 1) == -c) || (y + 1 < alpha.height && cls(x, y + 1) == -c);
      }
      seed(x, y) = on ? 1 : 0;
    }
  }
  return dilate(seed, radius);
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  require_same(a, b, "mask_or");
  BinaryMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = (a.data[i] | b.data[i]) ? 1 : 0;
  return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  require_same(a, b, "mask_and");
  BinaryMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = (a.data[i] & b.data[i]) ? 1 : 0;
  return out;
}

long mask_area(const BinaryMask& mask) {
  long n = 0;
  for (auto v : mask.data) n += v ? 1 : 0;
  return n;
}

AlphaMatte to_alpha(const BinaryMask& mask) {
  AlphaMatte a(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) a.data[i] = mask.data[i] ? 1.0 : 0.0;
  return a;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same(a, b, "iou");
  long inter = 0;
  long uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a.data[i] && b.data[i]) ? 1 : 0;
    uni += (a.data[i] || b.data[i]) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

BinaryMask rasterize(const Box& box, int width, int height) {
  BinaryMask m(width, height);
  const int x0 = std::clamp(box.x0, 0, width);
  const int x1 = std::clamp(box.x1, 0, width);
  const int y0 = std::clamp(box.y0, 0, height);
  const int y1 = std::clamp(box.y1, 0, height);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m(x, y) = 1;
  return m;
}

double iou(const Box& box, const BinaryMask& mask) {
  return iou(rasterize(box, mask.width, mask.height), mask);
}

double iou(const Box& a, const Box& b) {
  const long iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const long ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const long inter = iw * ih;
  const long uni = std::max(0L, a.area()) + std::max(0L, b.area()) - inter;
  return uni <= 0 ? 0.0 : double(inter) / double(uni);
}

std::optional<Box> bounding_box(const BinaryMask& mask) {
  Box b{mask.width, mask.height, -1, -1};
  bool any = false;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask(x, y)) {
        any = true;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
      }
  if (!any) return std::nullopt;
  return b;
}

std::optional<Box> bounding_box(const AlphaMatte& alpha) {
  BinaryMask support(alpha.width, alpha.height);
  for (std::size_t i = 0; i < alpha.size(); ++i) support.data[i] = alpha.data[i] > 0.0 ? 1 : 0;
  return bounding_box(support);
}

std::optional<Point> centroid(const BinaryMask& mask) {
  double sx = 0.0, sy = 0.0;
  long n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  if (n == 0) return std::nullopt;
  return Point{sx / double(n), sy / double(n)};
}

int Components::largest() const {
  int best = 0;
  long best_size = 0;
  for (int i = 0; i < count(); ++i) {
    if (sizes[i] > best_size) {
      best_size = sizes[i];
      best = i + 1;
    }
  }
  return best;
}

Components connected_components(const BinaryMask& mask) {
  Components out;
  out.labels = Grid<int>(mask.width, mask.height, 0);
  std::vector<int> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask(x, y) || out.labels(x, y) != 0) continue;
      const int label = out.count() + 1;
      long size = 0;
      stack.assign(1, y * mask.width + x);
      out.labels(x, y) = label;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        ++size;
        const int cx = idx % mask.width;
        const int cy = idx / mask.width;
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (!mask.contains(nx[k], ny[k])) continue;
          if (!mask(nx[k], ny[k]) || out.labels(nx[k], ny[k]) != 0) continue;
          out.labels(nx[k], ny[k]) = label;
          stack.push_back(ny[k] * mask.width + nx[k]);
        }
      }
      out.sizes.push_back(size);
    }
  }
  return out;
}

}  // namespace mam
