#pragma once

#include <optional>
#include <vector>

#include "mam/core/image.hpp"

namespace mam {

inline constexpr double kBandLow = 0.01;
inline constexpr double kBandHigh = 0.99;
inline constexpr int kBandRadius = 5;

/// 1 where α >= threshold.
BinaryMask binarize(const AlphaMatte& alpha, double threshold = 0.5);

/// Squared Euclidean distance from each pixel to the nearest set pixel
/// (exact, separable lower-envelope transform). Infinite when the mask is empty.
Plane squared_distance_to(const BinaryMask& mask);

/// Disk structuring element: a pixel is set when some set pixel lies within
/// Euclidean distance `radius`.
BinaryMask dilate(const BinaryMask& mask, int radius);
/// Complement of the dilation of the complement. Pixels beyond the border do
/// not erode the mask.
BinaryMask erode(const BinaryMask& mask, int radius);

/// Pixels with a 4-neighbour of the opposite value.
BinaryMask boundary(const BinaryMask& mask);

/// Seed pixels are the fractional ones (lo < α < hi) plus pixels at a hard
/// jump, i.e. α <= lo next to α >= hi (4-neighbour) and vice versa. The seed
/// is dilated by `radius`. For strictly binary α this is the dilated boundary.
BinaryMask transition_band(const AlphaMatte& alpha, int radius, double lo = kBandLow,
                           double hi = kBandHigh);

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
long mask_area(const BinaryMask& mask);
AlphaMatte to_alpha(const BinaryMask& mask);

/// |A∩B| / |A∪B|; 0 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);
double iou(const Box& box, const BinaryMask& mask);
double iou(const Box& a, const Box& b);

BinaryMask rasterize(const Box& box, int width, int height);

/// Tight box of the set pixels; nullopt when empty.
std::optional<Box> bounding_box(const BinaryMask& mask);
/// Tight box of α > 0.
std::optional<Box> bounding_box(const AlphaMatte& alpha);

std::optional<Point> centroid(const BinaryMask& mask);

struct Components {
  Grid<int> labels;         // 0 = background, 1..count
  std::vector<long> sizes;  // sizes[label - 1]
  [[nodiscard]] int count() const { return int(sizes.size()); }
  /// Label of the largest component (lowest label on ties), 0 when none.
  [[nodiscard]] int largest() const;
};

/// 4-connected labelling in raster order.
Components connected_components(const BinaryMask& mask);

}  // namespace mam
