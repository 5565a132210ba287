#include "mam/guidance/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "mam/core/morphology.hpp"
#include "mam/errors.hpp"

namespace mam::guidance {

bool Prompt::inside(int width, int height) const {
  if (kind == PromptKind::Box) return box.valid_in(width, height);
  return point.x >= 0.0 && point.y >= 0.0 && point.x < width && point.y < height;
}

std::vector<MaskCandidate> oracle_candidates(const std::vector<AlphaMatte>& gt_alphas,
                                             const OracleConfig& cfg) {
  if (gt_alphas.empty()) throw ContractError("oracle_candidates: need at least one alpha");
  if (cfg.r_max < 0) throw ConfigError("oracle_candidates: r_max must be >= 0");
  if (cfg.jitter < 0.0 || cfg.jitter > 1.0) throw ConfigError("oracle_candidates: jitter must be in [0,1]");
  std::vector<MaskCandidate> out;
  out.reserve(gt_alphas.size());
  for (std::size_t i = 0; i < gt_alphas.size(); ++i) {
    std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32), std::uint32_t(i)};
    std::mt19937_64 rng(seq);
    const BinaryMask gt = binarize(gt_alphas[i], cfg.threshold);
    MaskCandidate c;
    c.id = int(i);
    if (mask_area(gt) == 0) {
      spdlog::warn("oracle_candidates: instance {} has empty support", i);
      c.mask = gt;
      out.push_back(std::move(c));
      continue;
    }
    const int radius = std::uniform_int_distribution<int>(0, cfg.r_max)(rng);
    const bool grow = std::bernoulli_distribution(0.5)(rng);
    BinaryMask m = grow ? dilate(gt, radius) : erode(gt, radius);
    if (cfg.jitter > 0.0) {
      const BinaryMask edge = boundary(m);
      std::bernoulli_distribution flip(cfg.jitter);
      for (std::size_t k = 0; k < m.size(); ++k) {
        if (edge.data[k] && flip(rng)) m.data[k] = m.data[k] ? 0 : 1;
      }
    }
    c.score = iou(m, gt);
    c.mask = std::move(m);
    out.push_back(std::move(c));
  }
  return out;
}

const MaskCandidate& select_mask_by_box(const std::vector<MaskCandidate>& candidates, const Box& box) {
  if (candidates.empty()) throw SelectionError("select_mask_by_box: no candidates");
  const MaskCandidate* best = nullptr;
  double best_iou = -1.0;
  for (const auto& c : candidates) {
    const double v = iou(box, c.mask);
    if (v > best_iou || (v == best_iou && c.id < best->id)) {
      best_iou = v;
      best = &c;
    }
  }
  return *best;
}

const MaskCandidate& select_mask_by_point(const std::vector<MaskCandidate>& candidates,
                                          const Point& point) {
  if (candidates.empty()) throw SelectionError("select_mask_by_point: no candidates");
  const int px = int(std::floor(point.x));
  const int py = int(std::floor(point.y));
  const MaskCandidate* best = nullptr;
  long best_area = 0;
  for (const auto& c : candidates) {
    if (!c.mask.contains(px, py) || !c.mask(px, py)) continue;
    const long area = mask_area(c.mask);
    if (best == nullptr || area < best_area || (area == best_area && c.id < best->id)) {
      best = &c;
      best_area = area;
    }
  }
  if (best != nullptr) return *best;
  double best_dist = 0.0;
  for (const auto& c : candidates) {
    const auto cen = centroid(c.mask);
    if (!cen) continue;
    const double d = std::hypot(cen->x - point.x, cen->y - point.y);
    if (best == nullptr || d < best_dist || (d == best_dist && c.id < best->id)) {
      best = &c;
      best_dist = d;
    }
  }
  if (best == nullptr) {
    // Every candidate is empty; fall back to the lowest id.
    best = &*std::min_element(candidates.begin(), candidates.end(),
                              [](const auto& a, const auto& b) { return a.id < b.id; });
  }
  return *best;
}

const MaskCandidate& select_mask(const std::vector<MaskCandidate>& candidates, const Prompt& prompt) {
  return prompt.kind == PromptKind::Box ? select_mask_by_box(candidates, prompt.box)
                                        : select_mask_by_point(candidates, prompt.point);
}

namespace {

// Otsu threshold over a [0,1] plane with 256 bins.
double otsu(const Plane& p) {
  std::vector<double> hist(256, 0.0);
  for (double v : p.data) hist[std::clamp(int(v * 255.0 + 0.5), 0, 255)] += 1.0;
  const double total = double(p.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_t = 128;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    if (w0 == 0.0) continue;
    const double w1 = total - w0;
    if (w1 == 0.0) break;
    sum0 += t * hist[t];
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return (best_t + 0.5) / 255.0;
}

}  // namespace

std::vector<MaskCandidate> propose_candidates(const ImageRGB& image) {
  const int w = image.width;
  const int h = image.height;
  Plane luma(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      luma(x, y) = 0.299 * image.at(0, x, y) + 0.587 * image.at(1, x, y) + 0.114 * image.at(2, x, y);
  double border = 0.0;
  long n = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
        border += luma(x, y);
        ++n;
      }
  border /= double(std::max(1L, n));
  Plane contrast(w, h);
  double peak = 0.0;
  for (std::size_t i = 0; i < luma.size(); ++i) {
    contrast.data[i] = std::abs(luma.data[i] - border);
    peak = std::max(peak, contrast.data[i]);
  }
  if (peak > 0.0)
    for (double& v : contrast.data) v /= peak;
  BinaryMask fg = binarize(contrast, otsu(contrast));
  if (peak == 0.0) fg = BinaryMask(w, h);
  const auto cc = connected_components(fg);
  const long min_area = std::max(4L, long(w) * h / 200);
  std::vector<MaskCandidate> out;
  BinaryMask all(w, h);
  for (int label = 1; label <= cc.count(); ++label) {
    if (cc.sizes[label - 1] < min_area) continue;
    MaskCandidate c;
    c.mask = BinaryMask(w, h);
    for (std::size_t i = 0; i < c.mask.size(); ++i) {
      if (cc.labels.data[i] == label) c.mask.data[i] = all.data[i] = 1;
    }
    c.score = 0.1;
    c.id = int(out.size());
    out.push_back(std::move(c));
  }
  if (out.size() != 1) {
    MaskCandidate u;
    u.mask = mask_area(all) > 0 ? all : BinaryMask(w, h, 1);
    u.score = 0.1;
    u.id = int(out.size());
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace mam::guidance
