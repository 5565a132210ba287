#include "mam/train/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mam/core/compositing.hpp"
#include "mam/core/png_io.hpp"
#include "mam/core/resize.hpp"
#include "mam/errors.hpp"

namespace mam::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index),
                    std::uint32_t(index >> 32), tag};
  return std::mt19937_64(seq);
}

bool touches_border(const AlphaMatte& a) {
  for (int x = 0; x < a.width; ++x)
    if (a(x, 0) > 0.0 || a(x, a.height - 1) > 0.0) return true;
  for (int y = 0; y < a.height; ++y)
    if (a(0, y) > 0.0 || a(a.width - 1, y) > 0.0) return true;
  return false;
}

json read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorruptionError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

InstanceRecord generate_blob(std::mt19937_64& rng, const BlobOptions& opt) {
  const int s = opt.size;
  const double cx = s / 2.0;
  const double cy = s / 2.0;
  double r0 = uniform(rng, opt.radius_min, opt.radius_max) * s;
  const double aspect = uniform(rng, 0.75, 1.25);
  const double tilt = uniform(rng, 0.0, std::numbers::pi);
  const double sigma = uniform(rng, opt.feather_min, opt.feather_max);
  double amp[3];
  double phase[3];
  for (int k = 0; k < 3; ++k) {
    amp[k] = uniform(rng, 0.0, 0.07);
    phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }

  AlphaMatte alpha;
  for (int attempt = 0;; ++attempt) {
    alpha = AlphaMatte(s, s);
    const double rx = r0 * std::sqrt(aspect);
    const double ry = r0 / std::sqrt(aspect);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double rho = std::hypot(dx, dy);
        const double phi = std::atan2(dy, dx);
        const double u = std::cos(phi - tilt) / rx;
        const double v = std::sin(phi - tilt) / ry;
        double radius = 1.0 / std::sqrt(u * u + v * v);
        double wobble = 1.0;
        for (int k = 0; k < 3; ++k) wobble += amp[k] * std::cos((k + 2) * phi + phase[k]);
        radius *= wobble;
        double a = 0.5 * std::erfc((rho - radius) / (sigma * std::numbers::sqrt2));
        if (a < 1e-3) a = 0.0;
        if (a > 1.0 - 1e-3) a = 1.0;
        alpha(x, y) = a;
      }
    }
    if (!touches_border(alpha) || attempt >= 20) break;
    r0 *= 0.9;
  }

  std::array<double, 3> c0, c1;
  for (int c = 0; c < 3; ++c) {
    c0[c] = uniform(rng, 0.05, 0.95);
    c1[c] = std::clamp(c0[c] + uniform(rng, -0.3, 0.3), 0.0, 1.0);
  }
  const double dir = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> grain(0.0, 0.02);
  ImageRGB fg(s, s);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double t = 0.5 + ((x - cx) * std::cos(dir) + (y - cy) * std::sin(dir)) / s;
      for (int c = 0; c < 3; ++c) {
        fg.at(c, x, y) = std::clamp(c0[c] + (c1[c] - c0[c]) * t + grain(rng), 0.0, 1.0);
      }
    }
  }
  return InstanceRecord{std::move(fg), std::move(alpha), "blob"};
}

ImageRGB generate_background(std::mt19937_64& rng, int width, int height) {
  ImageRGB bg(width, height);
  std::normal_distribution<double> grain(0.0, 0.02);
  if (std::bernoulli_distribution(0.5)(rng)) {
    for (int c = 0; c < 3; ++c) {
      const double base = uniform(rng, 0.0, 1.0);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) bg.at(c, x, y) = std::clamp(base + grain(rng), 0.0, 1.0);
    }
    return bg;
  }
  for (int c = 0; c < 3; ++c) {
    Plane acc(width, height, uniform(rng, 0.2, 0.8));
    double amplitude = 0.5;
    for (int cells = 3; cells <= 24; cells *= 2, amplitude *= 0.5) {
      Plane coarse(cells, cells);
      for (auto& v : coarse.data) v = uniform(rng, -amplitude, amplitude);
      const auto fine = resize_bilinear(coarse, width, height);
      for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += fine.data[i];
    }
    for (auto& v : acc.data) v = std::clamp(v, 0.0, 1.0);
    bg.set_channel(c, acc);
  }
  return bg;
}

void write_synthetic_corpus(const fs::path& dir, const CorpusOptions& opt) {
  if (opt.count < 1) throw ConfigError(fmt::format("corpus count must be >= 1, got {}", opt.count));
  if (opt.test_count < 0 || opt.test_count >= opt.count) {
    throw ConfigError(fmt::format("test count {} must lie in [0, {})", opt.test_count, opt.count));
  }
  if (opt.size < 16) throw ConfigError(fmt::format("corpus image size must be >= 16, got {}", opt.size));
  BlobOptions blob;
  blob.size = opt.size;
  json train = json::array();
  json test = json::array();
  json backgrounds = json::array();
  for (int i = 0; i < opt.count; ++i) {
    const auto name = fmt::format("blob_{:04d}", i);
    const auto bg_name = fmt::format("bg_{:04d}", i);
    auto rng = stream(opt.seed, std::uint64_t(i), 1);
    const auto inst = generate_blob(rng, blob);
    auto bg_rng = stream(opt.seed, std::uint64_t(i), 2);
    const auto bg = generate_background(bg_rng, opt.size, opt.size);
    write_png_rgb(dir / "fg" / (name + ".png"), inst.foreground);
    write_png_gray(dir / "alpha" / (name + ".png"), inst.alpha, 16);
    write_png_rgb(dir / "bg" / (bg_name + ".png"), bg);
    write_png_rgb(dir / "image" / (name + ".png"), composite(inst.foreground, bg, inst.alpha));
    (i < opt.count - opt.test_count ? train : test).push_back(name);
    backgrounds.push_back(bg_name);
  }
  const json manifest{{"version", 1},   {"size", opt.size}, {"seed", opt.seed},
                      {"train", train}, {"test", test},     {"backgrounds", backgrounds}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Corpus load_corpus(const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  Corpus corpus;
  try {
    for (const auto& name : manifest.at("train")) {
      const auto n = name.get<std::string>();
      InstanceRecord rec{read_png_rgb(dir / "fg" / (n + ".png")), read_png_gray(dir / "alpha" / (n + ".png")), n};
      if (!rec.foreground.same_extent(rec.alpha)) {
        throw ShapeError(fmt::format("instance '{}': fg {}x{} vs alpha {}x{}", n, rec.foreground.width,
                                     rec.foreground.height, rec.alpha.width, rec.alpha.height));
      }
      corpus.train.push_back(std::move(rec));
    }
    for (const auto& name : manifest.at("backgrounds")) {
      corpus.backgrounds.push_back(read_png_rgb(dir / "bg" / (name.get<std::string>() + ".png")));
    }
    if (manifest.contains("test")) {
      for (const auto& name : manifest.at("test")) corpus.test_names.push_back(name.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw CorruptionError(fmt::format("{}: {}", (dir / "manifest.json").string(), e.what()));
  }
  if (corpus.train.empty()) throw IoError(fmt::format("corpus '{}' has no training instances", dir.string()));
  if (corpus.backgrounds.empty()) throw IoError(fmt::format("corpus '{}' has no backgrounds", dir.string()));
  return corpus;
}

std::vector<EvalItem> load_eval_items(const fs::path& dir, std::vector<std::string>* skipped,
                                      const std::string& split) {
  std::vector<std::string> names;
  if (fs::exists(dir / "manifest.json")) {
    const auto manifest = read_manifest(dir);
    if (!manifest.contains(split)) {
      throw IoError(fmt::format("manifest in '{}' has no '{}' split", dir.string(), split));
    }
    for (const auto& n : manifest.at(split)) names.push_back(n.get<std::string>());
  } else {
    if (!fs::is_directory(dir / "image")) {
      throw IoError(fmt::format("dataset '{}' has neither manifest.json nor image/", dir.string()));
    }
    for (const auto& entry : fs::directory_iterator(dir / "image")) {
      if (entry.path().extension() == ".png") names.push_back(entry.path().stem().string());
    }
    std::sort(names.begin(), names.end());
  }

  std::vector<EvalItem> items;
  for (const auto& name : names) {
    const auto image_path = dir / "image" / (name + ".png");
    if (!fs::exists(image_path)) {
      spdlog::warn("eval item '{}': missing image, skipped", name);
      if (skipped) skipped->push_back(name);
      continue;
    }
    EvalItem item{name, read_png_rgb(image_path), {}, std::nullopt};
    const auto single = dir / "alpha" / (name + ".png");
    if (fs::exists(single)) {
      item.instances.push_back(read_png_gray(single));
    } else {
      for (int k = 0;; ++k) {
        const auto path = dir / "alpha" / fmt::format("{}_{}.png", name, k);
        if (!fs::exists(path)) break;
        item.instances.push_back(read_png_gray(path));
      }
    }
    if (item.instances.empty()) {
      spdlog::warn("eval item '{}': no ground-truth alpha, skipped", name);
      if (skipped) skipped->push_back(name);
      continue;
    }
    for (const auto& a : item.instances) {
      if (!item.image.same_extent(a)) {
        throw ShapeError(fmt::format("eval item '{}': image {}x{} vs alpha {}x{}", name, item.image.width,
                                     item.image.height, a.width, a.height));
      }
    }
    const auto box_path = dir / "boxes" / (name + ".json");
    if (fs::exists(box_path)) {
      std::ifstream in(box_path);
      std::vector<Box> boxes;
      try {
        for (const auto& b : json::parse(in)) boxes.push_back(Box{b.at(0), b.at(1), b.at(2), b.at(3)});
      } catch (const json::exception& e) {
        throw CorruptionError(fmt::format("{}: {}", box_path.string(), e.what()));
      }
      if (boxes.size() != item.instances.size()) {
        throw ShapeError(fmt::format("eval item '{}': {} boxes for {} instances", name, boxes.size(),
                                     item.instances.size()));
      }
      item.boxes = std::move(boxes);
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace mam::train
