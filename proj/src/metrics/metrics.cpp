#include "mam/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <fmt/format.h>

#include "mam/core/morphology.hpp"
#include "mam/errors.hpp"

namespace mam::metrics {

namespace {

void check_extents(const AlphaMatte& pred, const AlphaMatte& gt, const char* what) {
  if (!pred.same_extent(gt)) {
    throw ShapeError(fmt::format("{}: prediction is {}x{}, ground truth {}x{}", what, pred.width, pred.height,
                                 gt.width, gt.height));
  }
}

const char* region_name(const RegionSpec& r) { return r.kind == RegionKind::All ? "all" : "tri"; }

BinaryMask nonempty_region(const AlphaMatte& gt, const RegionSpec& region, const char* what) {
  auto mask = region_mask(gt, region);
  if (mask_area(mask) == 0) throw ConfigError(fmt::format("{}: region '{}' is empty", what, region_name(region)));
  return mask;
}

// Filters with edge replication.
Plane filter(const Plane& x, const std::vector<double>& k, int half) {
  const int n = 2 * half + 1;
  Plane out(x.width, x.height);
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const int sy = std::clamp(y + j - half, 0, x.height - 1);
        for (int i = 0; i < n; ++i) {
          const int sx = std::clamp(xx + i - half, 0, x.width - 1);
          acc += k[std::size_t(j) * n + i] * x(sx, sy);
        }
      }
      out(xx, y) = acc;
    }
  return out;
}

Plane gradient_magnitude(const Plane& x, const GaussianDerivative& g) {
  const auto gx = filter(x, g.dx, g.half);
  const auto gy = filter(x, g.dy, g.half);
  Plane mag(x.width, x.height);
  for (std::size_t i = 0; i < mag.size(); ++i) mag.data[i] = std::hypot(gx.data[i], gy.data[i]);
  return mag;
}

// Per-pixel level l (see conn_error).
Plane connectivity_levels(const AlphaMatte& pred, const AlphaMatte& gt, double step) {
  Plane level(pred.width, pred.height, -1.0);
  const int steps = int(std::floor(1.0 / step + 1e-9));
  for (int i = 1; i <= steps; ++i) {
    const double theta = i * step;
    BinaryMask both(pred.width, pred.height);
    for (std::size_t p = 0; p < both.size(); ++p) both.data[p] = pred.data[p] >= theta && gt.data[p] >= theta;
    const auto cc = connected_components(both);
    const int omega = cc.largest();
    for (std::size_t p = 0; p < both.size(); ++p) {
      const bool inside = omega != 0 && cc.labels.data[p] == omega;
      if (level.data[p] == -1.0 && !inside) level.data[p] = (i - 1) * step;
    }
  }
  for (auto& v : level.data)
    if (v == -1.0) v = 1.0;
  return level;
}

double phi(double alpha, double level) {
  const double d = alpha - level;
  return 1.0 - (d >= 0.15 ? d : 0.0);
}

}  // namespace

int default_band_radius(int width, int height) {
  return std::max(1, int(std::lround(12.0 * std::max(width, height) / 1024.0)));
}

BinaryMask region_mask(const AlphaMatte& gt, const RegionSpec& region) {
  if (region.kind == RegionKind::All) return BinaryMask(gt.width, gt.height, 1);
  const int r = region.band_radius >= 0 ? region.band_radius : default_band_radius(gt.width, gt.height);
  return transition_band(gt, r, kBandLow, kBandHigh);
}

PixelErrors pixel_errors(const AlphaMatte& pred, const AlphaMatte& gt, const RegionSpec& region) {
  check_extents(pred, gt, "pixel_errors");
  const auto mask = nonempty_region(gt, region, "pixel_errors");
  double abs_sum = 0.0, sq_sum = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.data[i]) continue;
    const double d = pred.data[i] - gt.data[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    ++n;
  }
  return PixelErrors{abs_sum / 1000.0, abs_sum / n * 1e3, sq_sum / n * 1e3};
}

GaussianDerivative gaussian_derivative(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError(fmt::format("gaussian_derivative: sigma must be > 0, got {}", sigma));
  const double eps = 1e-2;
  const int half = int(std::ceil(sigma * std::sqrt(-2.0 * std::log(std::sqrt(2.0 * std::numbers::pi) * sigma * eps))));
  const int n = 2 * half + 1;
  auto gauss = [&](double x) { return std::exp(-x * x / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi)); };
  auto dgauss = [&](double x) { return -x * gauss(x) / (sigma * sigma); };
  GaussianDerivative g{half, std::vector<double>(std::size_t(n) * n), std::vector<double>(std::size_t(n) * n)};
  double norm = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = gauss(j - half) * dgauss(i - half);
      g.dx[std::size_t(j) * n + i] = v;
      norm += v * v;
    }
  norm = std::sqrt(norm);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      g.dx[std::size_t(j) * n + i] /= norm;
      g.dy[std::size_t(i) * n + j] = g.dx[std::size_t(j) * n + i];
    }
  return g;
}

double raw_grad(const AlphaMatte& pred, const AlphaMatte& gt, const BinaryMask& region, double sigma) {
  check_extents(pred, gt, "grad_error");
  const auto g = gaussian_derivative(sigma);
  const auto mp = gradient_magnitude(pred, g);
  const auto mg = gradient_magnitude(gt, g);
  double sum = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region.data[i]) sum += (mp.data[i] - mg.data[i]) * (mp.data[i] - mg.data[i]);
  }
  return sum;
}

double grad_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionSpec& region, double sigma) {
  check_extents(pred, gt, "grad_error");
  return raw_grad(pred, gt, nonempty_region(gt, region, "grad_error"), sigma) * 1e-3;
}

double raw_conn(const AlphaMatte& pred, const AlphaMatte& gt, const BinaryMask& region, double step) {
  check_extents(pred, gt, "conn_error");
  if (!(step > 0.0 && step <= 1.0)) throw ConfigError(fmt::format("conn_error: step must be in (0,1], got {}", step));
  const auto level = connectivity_levels(pred, gt, step);
  double sum = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region.data[i]) sum += std::abs(phi(pred.data[i], level.data[i]) - phi(gt.data[i], level.data[i]));
  }
  return sum;
}

double conn_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionSpec& region, double step) {
  check_extents(pred, gt, "conn_error");
  return raw_conn(pred, gt, nonempty_region(gt, region, "conn_error"), step) * 1e-3;
}

void IMQConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("imq: threshold must lie in (0,1)");
  if (!(tau > 0.0)) throw ConfigError("imq: tau must be > 0");
}

double imq(const std::vector<AlphaMatte>& preds, const std::vector<AlphaMatte>& gts, const IMQConfig& cfg) {
  cfg.validate();
  if (preds.empty() && gts.empty()) return 100.0;
  std::vector<BinaryMask> pb, gb;
  for (const auto& p : preds) pb.push_back(binarize(p, 0.5));
  for (const auto& g : gts) gb.push_back(binarize(g, 0.5));

  auto error = [&](const AlphaMatte& p, const AlphaMatte& g) {
    check_extents(p, g, "imq");
    const BinaryMask all(g.width, g.height, 1);
    switch (cfg.similarity) {
      case Similarity::Mad:
        return pixel_errors(p, g).mad * 1e-3;
      case Similarity::Mse:
        return pixel_errors(p, g).mse * 1e-3;
      case Similarity::Grad:
        return raw_grad(p, g, all);
      case Similarity::Conn:
        return raw_conn(p, g, all);
    }
    return 0.0;
  };

  struct Pair {
    double iou, err;
    std::size_t p, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double v = iou(pb[i], gb[j]);
      if (v > cfg.threshold) pairs.push_back(Pair{v, error(preds[i], gts[j]), i, j});
    }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.iou, a.err) < std::tie(a.iou, b.err);
  });
  std::vector<bool> used_p(preds.size()), used_g(gts.size());
  double quality = 0.0;
  std::size_t tp = 0;
  for (const auto& pr : pairs) {
    if (used_p[pr.p] || used_g[pr.g]) continue;
    used_p[pr.p] = used_g[pr.g] = true;
    ++tp;
    quality += std::max(0.0, 1.0 - pr.err / cfg.tau);
  }
  const double fp = double(preds.size() - tp);
  const double fn = double(gts.size() - tp);
  return 100.0 * quality / (double(tp) + 0.5 * fp + 0.5 * fn);
}

}  // namespace mam::metrics
