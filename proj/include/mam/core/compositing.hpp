#pragma once

#include <vector>

#include "mam/core/image.hpp"

namespace mam {

/// I = α·F + (1−α)·B per pixel and channel.
ImageRGB composite(const ImageRGB& fg, const ImageRGB& bg, const AlphaMatte& alpha);

/// I = Σ αᵢ·Fᵢ + (1 − Σ αᵢ)·B. Throws OverlapError (with the worst pixel)
/// when Σ αᵢ exceeds 1 + 1e-6 anywhere.
ImageRGB composite_multi(const std::vector<ImageRGB>& fgs, const std::vector<AlphaMatte>& alphas,
                         const ImageRGB& bg);

}  // namespace mam
