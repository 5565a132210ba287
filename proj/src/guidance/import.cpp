#include "mam/guidance/import.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <regex>

#include <fmt/format.h>

#include "mam/core/png_io.hpp"
#include "mam/errors.hpp"

namespace mam::guidance {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

namespace {

std::uint32_t read_u32(const Bytes& b, std::size_t off) {
  std::uint32_t v = 0;
  std::memcpy(&v, b.data() + off, 4);
  return v;
}

void put_u32(Bytes& b, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  b.insert(b.end(), p, p + 4);
}

}  // namespace

FeatureMap read_features(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  if (b.size() < 20 || std::memcmp(b.data(), "MAMF", 4) != 0) {
    throw CorruptionError(fmt::format("'{}': not a feature file (bad magic)", path.string()));
  }
  const auto version = read_u32(b, 4);
  if (version != kFeatureFileVersion) {
    throw CorruptionError(fmt::format("'{}': unsupported feature file version {}", path.string(), version));
  }
  const auto c = read_u32(b, 8);
  const auto h = read_u32(b, 12);
  const auto w = read_u32(b, 16);
  const std::size_t count = std::size_t(c) * h * w;
  if (c == 0 || h == 0 || w == 0 || b.size() != 20 + 4 * count) {
    throw CorruptionError(fmt::format("'{}': header says {}x{}x{} but payload is {} bytes", path.string(),
                                      c, h, w, b.size() - 20));
  }
  std::vector<float> values(count);
  std::memcpy(values.data(), b.data() + 20, 4 * count);
  return FeatureMap{ad::Tensor<float>({int(c), int(h), int(w)}, std::move(values))};
}

void write_features(const std::filesystem::path& path, const FeatureMap& features) {
  Bytes b{'M', 'A', 'M', 'F'};
  put_u32(b, kFeatureFileVersion);
  put_u32(b, std::uint32_t(features.channels()));
  put_u32(b, std::uint32_t(features.height()));
  put_u32(b, std::uint32_t(features.width()));
  const auto v = features.tensor.values();
  const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
  b.insert(b.end(), p, p + v.size() * 4);
  write_file(path, b);
}

GuidanceExport load_guidance(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError(fmt::format("guidance directory '{}' does not exist", dir.string()));
  }
  static const std::regex pattern(R"(candidate_(\d+)\.png)");
  GuidanceExport g;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    MaskCandidate c;
    c.id = std::stoi(m[1].str());
    c.mask = read_png_mask(entry.path());
    c.score = 1.0;
    g.candidates.push_back(std::move(c));
  }
  if (g.candidates.empty()) {
    throw IoError(fmt::format("guidance directory '{}' has no candidate_<id>.png files", dir.string()));
  }
  std::sort(g.candidates.begin(), g.candidates.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const auto& first = g.candidates.front().mask;
  for (const auto& c : g.candidates) {
    if (!c.mask.same_extent(first)) {
      throw ShapeError(fmt::format("guidance '{}': candidate {} is {}x{}, candidate {} is {}x{}", dir.string(),
                                   c.id, c.mask.width, c.mask.height, g.candidates.front().id,
                                   first.width, first.height));
    }
  }
  if (std::filesystem::exists(dir / "features.bin")) g.features = read_features(dir / "features.bin");
  return g;
}

void write_guidance(const std::filesystem::path& dir, const GuidanceExport& g) {
  std::filesystem::create_directories(dir);
  for (const auto& c : g.candidates) write_png_mask(dir / fmt::format("candidate_{}.png", c.id), c.mask);
  if (g.features) write_features(dir / "features.bin", *g.features);
}

}  // namespace mam::guidance
