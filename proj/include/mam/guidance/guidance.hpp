#pragma once

#include <cstdint>
#include <vector>

#include "mam/ad/tensor.hpp"
#include "mam/core/image.hpp"

namespace mam::guidance {

struct MaskCandidate {
  BinaryMask mask;
  double score = 0.0;  // confidence proxy in [0,1]
  int id = 0;
};

/// C×(H/16)×(W/16) guidance features.
struct FeatureMap {
  ad::Tensor<float> tensor;
  [[nodiscard]] int channels() const { return tensor.dim(0); }
  [[nodiscard]] int height() const { return tensor.dim(1); }
  [[nodiscard]] int width() const { return tensor.dim(2); }
};

enum class PromptKind { Box, Point };

struct Prompt {
  PromptKind kind = PromptKind::Box;
  Box box;
  // Continuous pixel coordinates: pixel (i, j) covers [i, i+1) × [j, j+1).
  Point point;

  static Prompt from_box(const Box& b) { return Prompt{PromptKind::Box, b, {}}; }
  static Prompt from_point(double x, double y) { return Prompt{PromptKind::Point, {}, Point{x, y}}; }
  [[nodiscard]] bool inside(int width, int height) const;
};

struct OracleConfig {
  double threshold = 0.5;
  int r_max = 3;
  double jitter = 0.1;  // flip probability for boundary pixels
  std::uint64_t seed = 0;
};

/// One candidate per ground-truth instance: binarize, then dilate or erode by
/// a radius drawn from [0, r_max], then flip each boundary pixel with
/// probability `jitter`. Instance i draws from its own stream seeded by
/// (seed, i). An instance with empty support logs a warning and yields an
/// empty candidate. Scores are the IoU with the binarized ground truth.
std::vector<MaskCandidate> oracle_candidates(const std::vector<AlphaMatte>& gt_alphas,
                                             const OracleConfig& cfg);

/// Argmax IoU with the rasterized box; ties go to the lower id.
const MaskCandidate& select_mask_by_box(const std::vector<MaskCandidate>& candidates, const Box& box);

/// Smallest-area candidate containing the point (lower id on ties); when none
/// contains it, the candidate whose centroid is nearest.
const MaskCandidate& select_mask_by_point(const std::vector<MaskCandidate>& candidates,
                                          const Point& point);

const MaskCandidate& select_mask(const std::vector<MaskCandidate>& candidates, const Prompt& prompt);

/// Built-in proposer used when no guidance export or ground truth exists:
/// luminance contrast against the border mean, Otsu threshold, then one
/// candidate per sizeable 4-connected component plus their union. Scores are
/// fixed low (0.1) to mark the result as a rough proposal.
std::vector<MaskCandidate> propose_candidates(const ImageRGB& image);

}  // namespace mam::guidance
