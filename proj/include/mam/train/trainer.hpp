#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "mam/train/checkpoint.hpp"
#include "mam/train/config.hpp"
#include "mam/train/corpus.hpp"

namespace mam::train {

/// One line of the training log (iter is the 0-based step index; lr is the
/// rate that step used).
struct LogRecord {
  int iter = 0;
  double loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;  // wall time since the call started; not written to the log file
};

nlohmann::json to_json(const LogRecord& r);
std::vector<LogRecord> read_log(const std::filesystem::path& path);

struct TrainResult {
  Checkpoint checkpoint;  // final state
  std::vector<LogRecord> log;  // records written by this call
  std::filesystem::path checkpoint_path;
};

struct TrainHooks {
  std::function<void(const LogRecord&)> on_step;
  // Stop (as if interrupted) after this many completed iterations; the
  // checkpoint at that point is written.
  std::optional<int> stop_at;
};

// Files under cfg.output_dir:
inline constexpr const char* kFinalCheckpoint = "final.mam";
inline constexpr const char* kTrainLog = "train_log.jsonl";
std::filesystem::path periodic_checkpoint_name(int iteration);

/// The full loop: per step, synthesize the batch (sample b of step i draws
/// from a stream seeded by (seed, i, b)), forward, weight maps, total loss,
/// backward, Adam at lr_at(i). Checkpoints every cfg.checkpoint_every
/// iterations and at the end; log lines are appended to train_log.jsonl.
/// Resuming from cfg.resume reproduces the uninterrupted run exactly.
/// A non-finite loss raises TrainingError naming the step; earlier
/// checkpoints stay on disk. `corpus` overrides loading cfg.dataset.
TrainResult train_run(const TrainConfig& cfg, const Corpus* corpus = nullptr, const TrainHooks& hooks = {});

/// Hyperparameters recorded in checkpoints (paths are left out so two runs
/// into different directories produce identical files).
nlohmann::json config_snapshot(const TrainConfig& cfg);

}  // namespace mam::train
