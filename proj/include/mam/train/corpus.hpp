#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mam/core/image.hpp"

namespace mam::train {

struct InstanceRecord {
  ImageRGB foreground;
  AlphaMatte alpha;
  std::string source;
};

struct BlobOptions {
  int size = 64;
  // Mean radius as a fraction of size.
  double radius_min = 0.14;
  double radius_max = 0.30;
  // Gaussian rim width (σ, pixels).
  double feather_min = 0.8;
  double feather_max = 2.5;
};

/// A soft-edged blob (ellipse with low-order boundary wobble) centred in a
/// size×size frame. α falls off as a Gaussian-feathered rim and is cut to 0
/// below 1e-3, so its support is compact. The foreground is a smooth colour
/// gradient with light texture.
InstanceRecord generate_blob(std::mt19937_64& rng, const BlobOptions& opt = {});

/// Flat colour with light noise, or multi-octave value noise.
ImageRGB generate_background(std::mt19937_64& rng, int width, int height);

struct CorpusOptions {
  int count = 200;
  int test_count = 20;
  int size = 64;
  std::uint64_t seed = 0;
};

/// Writes fg/, alpha/ (16-bit), bg/, image/ (each instance composited on its
/// background at the frame centre) and manifest.json with train/test splits.
void write_synthetic_corpus(const std::filesystem::path& dir, const CorpusOptions& opt);

/// One test image with its per-instance ground truth.
struct EvalItem {
  std::string name;
  ImageRGB image;
  std::vector<AlphaMatte> instances;
  std::optional<std::vector<Box>> boxes;
};

struct Corpus {
  std::vector<InstanceRecord> train;
  std::vector<ImageRGB> backgrounds;
  std::vector<std::string> test_names;
};

/// Reads manifest.json, the train split's fg/alpha pairs and every background.
/// Throws IoError for a missing manifest or file, ShapeError when fg and alpha
/// extents differ.
Corpus load_corpus(const std::filesystem::path& dir);

/// Reads image/<name>.png with alpha/<name>.png or alpha/<name>_<k>.png for
/// each name of the split (test by default; all images when the directory has
/// no manifest). Optional boxes come from boxes/<name>.json ([[x0,y0,x1,y1],…]).
/// Items without ground truth are skipped with a warning; their names are
/// returned in `skipped`.
std::vector<EvalItem> load_eval_items(const std::filesystem::path& dir, std::vector<std::string>* skipped = nullptr,
                                      const std::string& split = "test");

}  // namespace mam::train
