#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mam/guidance/guidance.hpp"
#include "mam/infer/refine.hpp"
#include "mam/metrics/metrics.hpp"
#include "mam/train/corpus.hpp"

namespace mam::metrics {

enum class PromptMode { Box, Point };

struct EvalConfig {
  PromptMode prompt = PromptMode::Box;
  infer::InferenceConfig inference;
  // Candidates come from <dataset>/guidance/<name>/ when present, otherwise
  // from this oracle applied to the ground truth.
  guidance::OracleConfig oracle;
  IMQConfig imq;
};

/// Per-image values (instance means for multi-instance images).
struct ItemReport {
  std::string name;
  int instances = 0;
  std::map<std::string, double> values;  // sad_all, mad_all, …, imq_mad, imq_mse
};

struct MetricReport {
  nlohmann::json config;
  std::vector<ItemReport> items;  // sorted by name
  std::map<std::string, double> aggregate;  // mean of the item values
  std::vector<std::string> skipped;
  int instance_count = 0;

  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::string table() const;
};

/// The metric keys, in table order.
const std::vector<std::string>& metric_keys();

/// Interior point farthest from the background (pixel centre; lowest index on
/// ties). Requires a nonempty mask.
Point interior_point(const BinaryMask& mask);

/// Mattes one instance per prompt with matte_from_prompt and scores every
/// image. Images are evaluated in parallel; the report is ordered by name.
MetricReport evaluate_items(const std::vector<train::EvalItem>& items, const infer::Refiner& refiner,
                            const EvalConfig& cfg, const std::filesystem::path& guidance_root = {});

/// Loads the dataset (see train::load_eval_items) and evaluates it.
MetricReport evaluate_dataset(const std::filesystem::path& dataset, const infer::Refiner& refiner,
                              const EvalConfig& cfg);

}  // namespace mam::metrics
