#include "mam/train/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "mam/errors.hpp"
#include "mam/m2m/model.hpp"

namespace mam::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (total_iterations < 0) throw ConfigError(fmt::format("total_iterations must be >= 0, got {}", total_iterations));
  if (warmup_iterations < 0) throw ConfigError(fmt::format("warmup_iterations must be >= 0, got {}", warmup_iterations));
  if (total_iterations > 0 && warmup_iterations >= total_iterations) {
    throw ConfigError(fmt::format("warmup_iterations ({}) must be below total_iterations ({})", warmup_iterations,
                                  total_iterations));
  }
  if (crop_size < 16 || crop_size % 16 != 0) {
    throw ConfigError(fmt::format("crop_size must be a positive multiple of 16, got {}", crop_size));
  }
  if (batch_size < 1) throw ConfigError(fmt::format("batch_size must be >= 1, got {}", batch_size));
  if (base_lr < 0.0) throw ConfigError("base_lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (loss.lambda_l1 < 0.0 || loss.lambda_lap < 0.0) throw ConfigError("loss weights must be nonnegative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  model.validate();
}

TrainConfig desk_preset(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.total_iterations = 2000;
  cfg.warmup_iterations = 400;
  cfg.batch_size = 8;
  cfg.crop_size = 64;
  cfg.seed = seed;
  cfg.model = m2m::toy_config(seed);
  cfg.oracle.seed = seed;
  return cfg;
}

double lr_at(int iter, const TrainConfig& cfg) {
  if (iter < cfg.warmup_iterations) return cfg.base_lr * double(iter) / double(cfg.warmup_iterations);
  const int decay = cfg.total_iterations - cfg.warmup_iterations;
  if (decay <= 0) return 0.0;
  const double t = std::min(1.0, double(iter - cfg.warmup_iterations) / double(decay));
  return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

json to_json(const m2m::M2MConfig& cfg) {
  return json{{"feature_channels", cfg.feature_channels},
              {"widths", cfg.widths},
              {"blocks", cfg.blocks},
              {"attention", cfg.attention},
              {"seed", cfg.seed}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", what));
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(fmt::format("{}: unknown key '{}'", what, key));
  }
}

template <typename V>
void read_if(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

}  // namespace

m2m::M2MConfig model_config_from_json(const json& j) {
  reject_unknown(j, {"feature_channels", "widths", "blocks", "attention", "seed"}, "model config");
  m2m::M2MConfig cfg;
  read_if(j, "feature_channels", cfg.feature_channels);
  read_if(j, "widths", cfg.widths);
  read_if(j, "blocks", cfg.blocks);
  read_if(j, "attention", cfg.attention);
  read_if(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

json to_json(const TrainConfig& cfg) {
  return json{{"total_iterations", cfg.total_iterations},
              {"warmup_iterations", cfg.warmup_iterations},
              {"base_lr", cfg.base_lr},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"batch_size", cfg.batch_size},
              {"crop_size", cfg.crop_size},
              {"seed", cfg.seed},
              {"lambda_l1", cfg.loss.lambda_l1},
              {"lambda_lap", cfg.loss.lambda_lap},
              {"model", to_json(cfg.model)},
              {"oracle",
               {{"threshold", cfg.oracle.threshold},
                {"r_max", cfg.oracle.r_max},
                {"jitter", cfg.oracle.jitter},
                {"seed", cfg.oracle.seed}}},
              {"dataset", cfg.dataset.string()},
              {"output_dir", cfg.output_dir.string()},
              {"checkpoint_every", cfg.checkpoint_every},
              {"resume", cfg.resume.string()}};
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& base) {
  reject_unknown(j,
                 {"preset", "total_iterations", "warmup_iterations", "base_lr", "beta1", "beta2", "batch_size",
                  "crop_size", "seed", "lambda_l1", "lambda_lap", "model", "oracle", "dataset", "output_dir",
                  "checkpoint_every", "resume"},
                 "train config");
  TrainConfig cfg = base;
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    if (name == "desk") {
      std::uint64_t seed = base.seed;
      read_if(j, "seed", seed);
      cfg = desk_preset(seed);
    } else if (name != "default") {
      throw ConfigError(fmt::format("unknown preset '{}' (expected desk or default)", name));
    }
  }
  read_if(j, "total_iterations", cfg.total_iterations);
  read_if(j, "warmup_iterations", cfg.warmup_iterations);
  read_if(j, "base_lr", cfg.base_lr);
  read_if(j, "beta1", cfg.beta1);
  read_if(j, "beta2", cfg.beta2);
  read_if(j, "batch_size", cfg.batch_size);
  read_if(j, "crop_size", cfg.crop_size);
  read_if(j, "seed", cfg.seed);
  read_if(j, "lambda_l1", cfg.loss.lambda_l1);
  read_if(j, "lambda_lap", cfg.loss.lambda_lap);
  if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    reject_unknown(o, {"threshold", "r_max", "jitter", "seed"}, "oracle config");
    read_if(o, "threshold", cfg.oracle.threshold);
    read_if(o, "r_max", cfg.oracle.r_max);
    read_if(o, "jitter", cfg.oracle.jitter);
    read_if(o, "seed", cfg.oracle.seed);
  }
  if (j.contains("dataset")) cfg.dataset = j.at("dataset").get<std::string>();
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  read_if(j, "checkpoint_every", cfg.checkpoint_every);
  if (j.contains("resume")) cfg.resume = j.at("resume").get<std::string>();
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  auto cfg = train_config_from_json(j);
  // Relative paths in the file resolve against the file's directory.
  const auto dir = path.parent_path();
  if (!cfg.dataset.empty() && cfg.dataset.is_relative()) cfg.dataset = dir / cfg.dataset;
  if (!cfg.output_dir.empty() && cfg.output_dir.is_relative()) cfg.output_dir = dir / cfg.output_dir;
  if (!cfg.resume.empty() && cfg.resume.is_relative()) cfg.resume = dir / cfg.resume;
  return cfg;
}

}  // namespace mam::train
