#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mam/guidance/guidance.hpp"

namespace mam::guidance {

// Export layout for one image: <stem>/candidate_<id>.png (binary masks at
// source resolution) and optionally <stem>/features.bin:
//   "MAMF", u32 version, u32 C, u32 h, u32 w, then C·h·w little-endian f32.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

struct GuidanceExport {
  std::vector<MaskCandidate> candidates;  // ascending id
  std::optional<FeatureMap> features;
};

/// Loads `dir` (the <stem> directory). IoError when it holds no candidates.
GuidanceExport load_guidance(const std::filesystem::path& dir);

FeatureMap read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureMap& features);
void write_guidance(const std::filesystem::path& dir, const GuidanceExport& g);

}  // namespace mam::guidance
