#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "mam/guidance/guidance.hpp"
#include "mam/m2m/network.hpp"

namespace mam::train {

struct LossWeights {
  double lambda_l1 = 1.0;
  double lambda_lap = 1.0;
};

struct TrainConfig {
  int total_iterations = 20000;
  int warmup_iterations = 4000;
  double base_lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.99;
  int batch_size = 10;
  int crop_size = 1024;
  std::uint64_t seed = 0;
  LossWeights loss;
  m2m::M2MConfig model;
  guidance::OracleConfig oracle;

  std::filesystem::path dataset;
  std::filesystem::path output_dir = "run";
  int checkpoint_every = 500;  // 0 = only the final checkpoint
  // Continue from this checkpoint when set.
  std::filesystem::path resume;

  /// Throws ConfigError: warmup must be < total (or both 0), crop a positive
  /// multiple of 16, batch ≥ 1, λ ≥ 0.
  void validate() const;
};

/// crop 64, total 2000, warmup 400, batch 8, toy network widths.
TrainConfig desk_preset(std::uint64_t seed = 0);

/// Linear warmup to base_lr, then cosine decay to zero at total_iterations.
double lr_at(int iter, const TrainConfig& cfg);

nlohmann::json to_json(const m2m::M2MConfig& cfg);
m2m::M2MConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults (from `base`); unknown keys are a ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace mam::train
