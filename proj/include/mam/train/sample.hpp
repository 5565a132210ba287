#pragma once

#include <random>

#include "mam/core/image.hpp"
#include "mam/guidance/guidance.hpp"
#include "mam/train/corpus.hpp"

namespace mam::train {

struct TrainingSample {
  ImageRGB image;      // composite
  AlphaMatte alpha;    // ground truth
  Box box;             // tight bounding box of alpha > 0
  BinaryMask mask;     // oracle guidance
};

struct SynthesisOptions {
  double scale_min = 0.75;
  double scale_max = 1.25;
  // Each failed fit multiplies the scale by this.
  double shrink = 0.8;
  int max_attempts = 10;
  guidance::OracleConfig oracle;
};

/// Randomly rescales the instance (bilinear), places it so its support lies
/// inside a crop×crop window over a randomly rescaled and cropped background,
/// composites, and draws the oracle guidance mask. When the scaled support
/// does not fit, the scale shrinks and placement retries; ShapeError after
/// `max_attempts`. The result is a pure function of the rng state.
TrainingSample synthesize_sample(const InstanceRecord& instance, const ImageRGB& background, int crop,
                                 std::mt19937_64& rng, const SynthesisOptions& opt = {});

}  // namespace mam::train
