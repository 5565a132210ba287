#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mam/ad/adam.hpp"
#include "mam/m2m/model.hpp"

namespace mam::train {

// File layout: magic "MAM2M1\0\0", u32 version, u64 header length, JSON
// header {config, entries: [{path, dtype, shape, offset, bytes}]}, then the
// little-endian payloads back to back. Parameters keep their own paths;
// reserved paths hold the rest:
//   @buffers/<path>   batch-norm running statistics
//   @adam/m/<path>    first moments     @adam/v/<path>  second moments
//   @adam/t           Adam step count (i64)
//   @iteration        completed iterations (i64)

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string path;
  ad::Shape shape;
  std::vector<float> f32;         // dtype "f32"
  std::vector<std::int64_t> i64;  // dtype "i64"

  [[nodiscard]] bool is_integer() const { return f32.empty() && !i64.empty(); }
};

struct Checkpoint {
  nlohmann::json config;  // {"model": …, "train": …}
  std::vector<CheckpointEntry> entries;

  [[nodiscard]] const CheckpointEntry* find(const std::string& path) const;
  [[nodiscard]] std::int64_t iteration() const;
  [[nodiscard]] m2m::M2MConfig model_config() const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// CorruptionError for a bad magic, unsupported version, malformed header or
/// truncated payload.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames, so an existing checkpoint at
/// `path` survives a failed write.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Snapshot of parameters, buffers, optional optimizer state and iteration.
Checkpoint capture_checkpoint(const m2m::MattingModel<float>& model, const ad::AdamState<float>* adam,
                              std::int64_t iteration, const nlohmann::json& train_config = nlohmann::json::object());

/// Copies the checkpoint into `model` (and `adam` when given). Every model
/// parameter and buffer must be present with the same shape and every
/// non-reserved checkpoint path must belong to the model; otherwise
/// ShapeError naming the path. Returns the stored iteration.
std::int64_t restore_checkpoint(const Checkpoint& ckpt, m2m::MattingModel<float>& model,
                                ad::AdamState<float>* adam = nullptr);

/// Builds the model from the stored config and restores it.
std::unique_ptr<m2m::MattingModel<float>> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace mam::train
