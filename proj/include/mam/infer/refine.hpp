#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mam/core/image.hpp"
#include "mam/guidance/guidance.hpp"
#include "mam/m2m/model.hpp"

namespace mam::infer {

/// Where the merge starts: the guidance mask (multi-instance scenes, drops
/// false positives outside the mask) or the upsampled α_os8 (single-instance).
enum class MergeBase { FromMask, FromOs8 };

struct MergePolicy {
  MergeBase base = MergeBase::FromOs8;
  int r4 = 30;  // dilation of binarize(base) that receives α_os4
  int r1 = 15;  // transition-band radius of α_os4 that receives α_os1
  double threshold = 0.5;

  /// Radii 30/15 at a 1024 target, scaled proportionally (rounded).
  static MergePolicy for_target(int target, MergeBase base = MergeBase::FromOs8);
};

struct InferenceConfig {
  int target = 1024;  // long side after resize; multiple of 16
  MergeBase base = MergeBase::FromOs8;
  std::optional<int> r4;  // default: scaled from target
  std::optional<int> r1;

  [[nodiscard]] MergePolicy policy() const;
  void validate() const;
};

/// Maps between source pixels and the padded target×target frame. The image
/// is scaled by (scaled_w/src_w, scaled_h/src_h) into the top-left corner;
/// the rest is zero padding.
struct Transform {
  int src_w = 0, src_h = 0;
  int scaled_w = 0, scaled_h = 0;
  int target = 0;

  [[nodiscard]] double sx() const { return double(scaled_w) / src_w; }
  [[nodiscard]] double sy() const { return double(scaled_h) / src_h; }
  [[nodiscard]] Point to_target(const Point& p) const { return {p.x * sx(), p.y * sy()}; }
  [[nodiscard]] Point to_source(const Point& p) const { return {p.x / sx(), p.y / sy()}; }
  /// Corners mapped and rounded to the nearest pixel edge.
  [[nodiscard]] Box to_target(const Box& b) const;
  [[nodiscard]] Box to_source(const Box& b) const;
};

struct Preprocessed {
  ImageRGB image;
  Transform transform;
};

/// Bilinear resize so the long side equals `target`, then zero padding to
/// target×target (right and bottom).
Preprocessed preprocess(const ImageRGB& image, int target);
/// The mask under the same transform (area resize, rebinarized; zero padding).
BinaryMask preprocess_mask(const BinaryMask& mask, const Transform& t);
/// Crops the padding and resizes (bilinear) back to the source extents.
AlphaMatte restore(const AlphaMatte& matte, const Transform& t);

/// Starts from `base`; R4 = dilate(binarize(base), r4) takes α_os4 (upsampled
/// bilinearly), then R1 = transition_band(upsampled α_os4, r1) takes α_os1.
/// Output clamped to [0,1]. ShapeError unless os1 matches base.
AlphaMatte merge_multiscale(const AlphaMatte& base, const m2m::MultiScalePrediction& preds,
                            const MergePolicy& policy);

/// The base map for a policy: the mask itself or α_os8 upsampled to its extents.
AlphaMatte merge_base(const MergePolicy& policy, const BinaryMask& mask, const m2m::MultiScalePrediction& preds);

/// Produces the three-scale prediction for a preprocessed image and mask.
class Refiner {
 public:
  virtual ~Refiner() = default;
  [[nodiscard]] virtual m2m::MultiScalePrediction refine(const ImageRGB& image, const BinaryMask& mask,
                                                         const guidance::FeatureMap* features) const = 0;
};

/// The trained network (inference mode). Shares the model read-only, so one
/// instance may serve concurrent calls.
class NetworkRefiner final : public Refiner {
 public:
  explicit NetworkRefiner(std::shared_ptr<const m2m::MattingModel<float>> model) : model_(std::move(model)) {}
  [[nodiscard]] m2m::MultiScalePrediction refine(const ImageRGB& image, const BinaryMask& mask,
                                                 const guidance::FeatureMap* features) const override;
  [[nodiscard]] const m2m::MattingModel<float>& model() const { return *model_; }

 private:
  std::shared_ptr<const m2m::MattingModel<float>> model_;
};

struct MatteResult {
  AlphaMatte matte;  // source extents
  guidance::MaskCandidate selected;
  m2m::MultiScalePrediction preds;  // target frame
  Transform transform;
};

/// preprocess → select the candidate for the prompt (source coordinates) →
/// refine → merge → restore to source extents. Candidates must have the
/// source extents (ShapeError otherwise); none → SelectionError. `features`,
/// when given, are the imported guidance features for the target frame.
MatteResult matte_from_prompt(const ImageRGB& image, const guidance::Prompt& prompt,
                              const std::vector<guidance::MaskCandidate>& candidates, const Refiner& refiner,
                              const InferenceConfig& cfg, const guidance::FeatureMap* features = nullptr);

}  // namespace mam::infer
