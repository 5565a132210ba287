#pragma once

#include <vector>

#include "mam/core/image.hpp"

namespace mam {

/// levels[0] is the finest difference plane; base is the coarsest blur.
struct Pyramid {
  std::vector<Plane> levels;
  Plane base;
};

/// Binomial [1,4,6,4,1]/16 Laplacian pyramid with reflect-101 borders.
/// Each level halves (rounding up). Throws ConfigError when levels < 1 or an
/// extent is below 2^levels.
Pyramid laplacian_pyramid(const Plane& plane, int levels);

/// Upsample-and-add from the coarsest level.
Plane reconstruct(const Pyramid& pyramid);

/// Largest level count (≤ cap) the extents allow.
int max_pyramid_levels(int width, int height, int cap = 4);

}  // namespace mam
