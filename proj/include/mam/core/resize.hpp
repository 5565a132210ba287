#pragma once

#include "mam/core/image.hpp"

namespace mam {

// Half-pixel-center bilinear with edge clamp.
Plane resize_bilinear(const Plane& plane, int width, int height);
ImageRGB resize_bilinear(const ImageRGB& image, int width, int height);

// Box-filter coverage averaging.
Plane resize_area(const Plane& plane, int width, int height);
ImageRGB resize_area(const ImageRGB& image, int width, int height);

/// Area-average to the target extents, then re-binarize at 0.5.
BinaryMask resize_mask(const BinaryMask& mask, int width, int height);

Plane crop(const Plane& plane, const Box& box);
ImageRGB crop(const ImageRGB& image, const Box& box);
BinaryMask crop(const BinaryMask& mask, const Box& box);

}  // namespace mam
