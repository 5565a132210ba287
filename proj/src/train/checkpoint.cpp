#include "mam/train/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

#include <fmt/format.h>

#include "mam/core/png_io.hpp"
#include "mam/errors.hpp"
#include "mam/train/config.hpp"

namespace mam::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'A', 'M', '2', 'M', '1', '\0', '\0'};
constexpr std::size_t kPreamble = 8 + 4 + 8;

template <typename V>
void put_le(std::vector<std::uint8_t>& out, V value) {
  std::uint8_t raw[sizeof(V)];
  std::memcpy(raw, &value, sizeof(V));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(V));
  out.insert(out.end(), raw, raw + sizeof(V));
}

template <typename V>
V get_le(const std::uint8_t* in) {
  std::uint8_t raw[sizeof(V)];
  std::memcpy(raw, in, sizeof(V));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(V));
  V value;
  std::memcpy(&value, raw, sizeof(V));
  return value;
}

bool is_reserved(const std::string& path) { return !path.empty() && path.front() == '@'; }

CheckpointEntry f32_entry(const std::string& path, const ad::Shape& shape, std::span<const float> values) {
  return CheckpointEntry{path, shape, std::vector<float>(values.begin(), values.end()), {}};
}

CheckpointEntry i64_entry(const std::string& path, std::int64_t value) {
  return CheckpointEntry{path, {1}, {}, {value}};
}

void copy_into(const CheckpointEntry& e, ad::Tensor<float>& t) {
  if (e.shape != t.shape() || e.is_integer()) {
    throw ShapeError(fmt::format("checkpoint tensor '{}' has shape {}, model expects {}", e.path,
                                 ad::shape_str(e.shape), ad::shape_str(t.shape())));
  }
  auto dst = t.mutable_values();
  std::copy(e.f32.begin(), e.f32.end(), dst.begin());
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& path) const {
  for (const auto& e : entries)
    if (e.path == path) return &e;
  return nullptr;
}

std::int64_t Checkpoint::iteration() const {
  const auto* e = find("@iteration");
  return e && e->is_integer() ? e->i64.front() : 0;
}

m2m::M2MConfig Checkpoint::model_config() const {
  if (!config.contains("model")) throw CorruptionError("checkpoint header has no model config");
  return model_config_from_json(config.at("model"));
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  json entries = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : ckpt.entries) {
    const bool integer = e.is_integer();
    const std::uint64_t bytes = integer ? e.i64.size() * 8 : e.f32.size() * 4;
    if ((integer ? e.i64.size() : e.f32.size()) != ad::shape_numel(e.shape)) {
      throw ContractError(fmt::format("checkpoint entry '{}': {} values for shape {}", e.path,
                                      integer ? e.i64.size() : e.f32.size(), ad::shape_str(e.shape)));
    }
    entries.push_back(json{{"path", e.path},
                           {"dtype", integer ? "i64" : "f32"},
                           {"shape", e.shape},
                           {"offset", offset},
                           {"bytes", bytes}});
    offset += bytes;
  }
  const std::string header = json{{"config", ckpt.config}, {"entries", entries}}.dump();

  std::vector<std::uint8_t> out;
  out.reserve(kPreamble + header.size() + offset);
  out.insert(out.end(), kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  for (const auto& e : ckpt.entries) {
    if (e.is_integer()) {
      for (auto v : e.i64) put_le(out, v);
    } else {
      for (auto v : e.f32) put_le(out, v);
    }
  }
  return out;
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreamble) throw CorruptionError("checkpoint truncated: shorter than its preamble");
  if (!std::equal(kMagic, kMagic + 8, bytes.begin())) throw CorruptionError("not a checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(bytes.data() + 8);
  if (version != kCheckpointVersion) {
    throw CorruptionError(fmt::format("unsupported checkpoint version {} (expected {})", version, kCheckpointVersion));
  }
  const auto header_len = get_le<std::uint64_t>(bytes.data() + 12);
  if (header_len > bytes.size() - kPreamble) throw CorruptionError("checkpoint truncated inside its header");
  const auto payload = bytes.subspan(kPreamble + header_len);

  Checkpoint ckpt;
  try {
    const auto header = json::parse(bytes.begin() + kPreamble, bytes.begin() + kPreamble + header_len);
    ckpt.config = header.at("config");
    for (const auto& j : header.at("entries")) {
      CheckpointEntry e;
      e.path = j.at("path").get<std::string>();
      e.shape = j.at("shape").get<ad::Shape>();
      const auto dtype = j.at("dtype").get<std::string>();
      const auto offset = j.at("offset").get<std::uint64_t>();
      const auto size = j.at("bytes").get<std::uint64_t>();
      const std::size_t n = ad::shape_numel(e.shape);
      const std::size_t width = dtype == "f32" ? 4 : dtype == "i64" ? 8 : 0;
      if (width == 0) throw CorruptionError(fmt::format("checkpoint entry '{}': unknown dtype '{}'", e.path, dtype));
      if (size != n * width) {
        throw CorruptionError(fmt::format("checkpoint entry '{}': {} bytes for shape {}", e.path, size,
                                          ad::shape_str(e.shape)));
      }
      if (offset > payload.size() || size > payload.size() - offset) {
        throw CorruptionError(fmt::format("checkpoint truncated: entry '{}' runs past the end of the file", e.path));
      }
      const std::uint8_t* p = payload.data() + offset;
      if (width == 4) {
        e.f32.resize(n);
        for (std::size_t i = 0; i < n; ++i) e.f32[i] = get_le<float>(p + 4 * i);
      } else {
        e.i64.resize(n);
        for (std::size_t i = 0; i < n; ++i) e.i64[i] = get_le<std::int64_t>(p + 8 * i);
      }
      ckpt.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw CorruptionError(fmt::format("malformed checkpoint header: {}", e.what()));
  }
  return ckpt;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move checkpoint into place at '{}': {}", path.string(), ec.message()));
}

Checkpoint load_checkpoint(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_checkpoint(bytes);
  } catch (const CorruptionError& e) {
    throw CorruptionError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

Checkpoint capture_checkpoint(const m2m::MattingModel<float>& model, const ad::AdamState<float>* adam,
                              std::int64_t iteration, const json& train_config) {
  Checkpoint ckpt;
  ckpt.config = json{{"model", to_json(model.config())}, {"train", train_config}};
  for (const auto& [path, p] : model.params()) ckpt.entries.push_back(f32_entry(path, p.shape(), p.values()));
  for (const auto& [path, b] : model.buffers()) {
    ckpt.entries.push_back(f32_entry("@buffers/" + path, b.shape(), b.values()));
  }
  if (adam) {
    for (const auto& [path, p] : model.params()) {
      const auto m = adam->first_moment.find(path);
      const auto v = adam->second_moment.find(path);
      if (m == adam->first_moment.end() || v == adam->second_moment.end()) continue;
      ckpt.entries.push_back(f32_entry("@adam/m/" + path, p.shape(), m->second));
      ckpt.entries.push_back(f32_entry("@adam/v/" + path, p.shape(), v->second));
    }
    ckpt.entries.push_back(i64_entry("@adam/t", adam->step));
  }
  ckpt.entries.push_back(i64_entry("@iteration", iteration));
  return ckpt;
}

std::int64_t restore_checkpoint(const Checkpoint& ckpt, m2m::MattingModel<float>& model, ad::AdamState<float>* adam) {
  std::set<std::string> known;
  for (auto& [path, p] : model.params()) {
    const auto* e = ckpt.find(path);
    if (!e) throw ShapeError(fmt::format("checkpoint has no tensor for parameter '{}'", path));
    copy_into(*e, p);
    known.insert(path);
  }
  for (auto& [path, b] : model.buffers()) {
    const auto* e = ckpt.find("@buffers/" + path);
    if (!e) throw ShapeError(fmt::format("checkpoint has no tensor for buffer '{}'", path));
    copy_into(*e, b);
  }
  for (const auto& e : ckpt.entries) {
    if (!is_reserved(e.path) && !known.contains(e.path)) {
      throw ShapeError(fmt::format("checkpoint tensor '{}' has no matching model parameter", e.path));
    }
  }
  if (adam) {
    *adam = ad::AdamState<float>{};
    for (const auto& [path, p] : model.params()) {
      const auto* m = ckpt.find("@adam/m/" + path);
      const auto* v = ckpt.find("@adam/v/" + path);
      if (!m || !v) continue;
      if (m->shape != p.shape() || v->shape != p.shape()) {
        throw ShapeError(fmt::format("checkpoint optimizer state for '{}' has the wrong shape", path));
      }
      adam->first_moment[path] = m->f32;
      adam->second_moment[path] = v->f32;
    }
    if (const auto* t = ckpt.find("@adam/t"); t && t->is_integer()) adam->step = t->i64.front();
  }
  return ckpt.iteration();
}

std::unique_ptr<m2m::MattingModel<float>> model_from_checkpoint(const Checkpoint& ckpt) {
  auto model = std::make_unique<m2m::MattingModel<float>>(ckpt.model_config());
  restore_checkpoint(ckpt, *model);
  return model;
}

}  // namespace mam::train
