#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "mam/ad/ops.hpp"
#include "mam/core/compositing.hpp"
#include "mam/core/convert.hpp"
#include "mam/core/morphology.hpp"
#include "mam/core/png_io.hpp"
#include "mam/core/pyramid.hpp"
#include "mam/core/resize.hpp"
#include "mam/errors.hpp"
#include "mam/train/checkpoint.hpp"
#include "mam/train/corpus.hpp"
#include "mam/train/loss.hpp"
#include "mam/train/sample.hpp"
#include "mam/train/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mam;
using namespace mam::train;
using mam::testing::gradcheck;
using mam::testing::gradcheck_steps;
using mam::testing::random_tensor;
using mam::testing::TempDir;
using namespace mam::testing::oracles;

namespace {

Plane constant(int w, int h, double v) { return Plane(w, h, v); }

// Independent Laplacian loss on planes via the core pyramid.
double laplacian_oracle(const Plane& pred, const Plane& gt, const Plane& w, int levels) {
  Plane diff(pred.width, pred.height);
  double wsum = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff.data[i] = w.data[i] * (pred.data[i] - gt.data[i]);
    wsum += w.data[i];
  }
  const auto pyr = laplacian_pyramid(diff, levels);
  double total = 0.0;
  for (int k = 0; k < levels; ++k)
    for (double v : pyr.levels[k].data) total += std::ldexp(std::abs(v), k);
  for (double v : pyr.base.data) total += std::ldexp(std::abs(v), levels);
  return total / std::max(wsum, 1.0);
}

Corpus small_corpus(int count, std::uint64_t seed) {
  Corpus c;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(seed * 1000 + i);
    c.train.push_back(generate_blob(rng));
    c.backgrounds.push_back(generate_background(rng, 64, 64));
  }
  return c;
}

TrainConfig tiny_run(const std::filesystem::path& out, int total, int warmup) {
  auto cfg = desk_preset(3);
  cfg.total_iterations = total;
  cfg.warmup_iterations = warmup;
  cfg.batch_size = 4;
  cfg.checkpoint_every = 0;
  cfg.output_dir = out;
  return cfg;
}

std::vector<std::pair<double, double>> loss_lr(const std::vector<LogRecord>& log) {
  std::vector<std::pair<double, double>> out;
  for (const auto& r : log) out.emplace_back(r.loss, r.lr);
  return out;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const TrainConfig cfg;
  CHECK(lr_at(0, cfg) == 0.0);
  CHECK(lr_at(2000, cfg) == doctest::Approx(5e-4).epsilon(1e-12));
  CHECK(std::abs(lr_at(4000, cfg) - 0.001) < 1e-15);
  CHECK(std::abs(lr_at(20000, cfg)) < 1e-12);
  CHECK(lr_at(12000, cfg) == doctest::Approx(5e-4).epsilon(1e-12));
  // Continuous at the switch and nonincreasing after it.
  CHECK(std::abs(lr_at(3999, cfg) - lr_at(4000, cfg)) < 1e-6);
  for (int i = 4000; i < 20000; ++i) REQUIRE(lr_at(i + 1, cfg) <= lr_at(i, cfg));
  const auto desk = desk_preset();
  CHECK(lr_at(400, desk) == doctest::Approx(1e-3));
  CHECK(std::abs(lr_at(2000, desk)) < 1e-12);
}

TEST_CASE("train config validation and json") {
  TrainConfig cfg = desk_preset(5);
  CHECK_NOTHROW(cfg.validate());
  cfg.crop_size = 72;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = desk_preset(5);
  cfg.warmup_iterations = cfg.total_iterations;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = desk_preset(5);
  cfg.loss.lambda_lap = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  const auto back = train_config_from_json(to_json(desk_preset(5)));
  CHECK(back.total_iterations == 2000);
  CHECK(back.warmup_iterations == 400);
  CHECK(back.crop_size == 64);
  CHECK(back.batch_size == 8);
  CHECK(back.model.widths == desk_preset(5).model.widths);
  CHECK(back.model.feature_channels == 8);

  const auto preset = train_config_from_json(nlohmann::json{{"preset", "desk"}, {"total_iterations", 0}});
  CHECK(preset.total_iterations == 0);
  CHECK(preset.crop_size == 64);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"total_iters", 3}}), ConfigError);
}

TEST_CASE("weight maps follow the schedule") {
  const TrainConfig cfg;  // warmup 4000
  BinaryMask square(64, 64);
  for (int y = 16; y < 48; ++y)
    for (int x = 16; x < 48; ++x) square(x, y) = 1;
  const auto alpha4 = soft_disk(16, 8.0, 8.0, 4.0, 3.0);

  for (int iter : {0, 1000, 3999}) {
    const auto maps = weight_maps_for_iteration(iter, cfg, square, alpha4);
    CHECK(all_equal(maps.w_os8, 1.0));
    CHECK(all_equal(maps.w_os4, 1.0));
    CHECK(all_equal(maps.w_os1, 1.0));
    CHECK(maps.w_os8.width == 8);
    CHECK(maps.w_os4.width == 16);
    CHECK(maps.w_os1.width == 64);
  }
  for (int iter : {4000, 5000, 19999}) {
    const auto maps = weight_maps_for_iteration(iter, cfg, square, alpha4);
    CHECK(all_equal(maps.w_os8, 1.0));
    CHECK(maps.w_os4 == as_plane(dilate_oracle(block_downsample_oracle(square, 4), 3)));
    CHECK(maps.w_os1 == as_plane(band_oracle(resize_bilinear(alpha4, 64, 64), 5)));
    // Interior of the disk and far background are outside the rim band.
    CHECK(maps.w_os1(32, 32) == 0.0);
    CHECK(maps.w_os1(0, 0) == 0.0);
    CHECK(maps.w_os1(32 + 16, 32) == 1.0);
  }
  // Random masks and predictions at and after the switch.
  std::mt19937 rng(11);
  for (int t = 0; t < 10; ++t) {
    BinaryMask m(32, 32);
    const int x0 = rng() % 12, y0 = rng() % 12;
    for (int y = y0; y < y0 + 14; ++y)
      for (int x = x0; x < x0 + 10; ++x) m(x, y) = 1;
    const auto a4 = random_plane(rng, 8, 8);
    const auto maps = weight_maps_for_iteration(4000, cfg, m, a4);
    CHECK(maps.w_os4 == as_plane(dilate_oracle(block_downsample_oracle(m, 4), 3)));
    CHECK(maps.w_os1 == as_plane(band_oracle(resize_bilinear(a4, 32, 32), 5)));
  }
  CHECK_THROWS_AS((void)weight_maps_for_iteration(4000, cfg, square, soft_disk(8, 4, 4, 2, 2)), ShapeError);
}

TEST_CASE("weighted L1") {
  std::mt19937 rng(1);
  const auto gt = random_plane(rng, 16, 16);
  const auto ones = constant(16, 16, 1.0);
  CHECK(loss_weighted_l1(gt, gt, ones) == 0.0);
  auto shifted = gt;
  for (auto& v : shifted.data) v += 0.1;
  CHECK(loss_weighted_l1(shifted, gt, ones) == doctest::Approx(0.1).epsilon(1e-12));

  // Errors only outside the weighted region are ignored.
  Plane w(16, 16);
  auto split = gt;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      if (x < 8) w(x, y) = 1.0;
      else split(x, y) += 0.7;
    }
  CHECK(loss_weighted_l1(split, gt, w) == 0.0);
  CHECK(loss_weighted_l1(split, gt, ones) > 0.0);
  CHECK(loss_weighted_l1(shifted, gt, constant(16, 16, 0.0)) == 0.0);
  CHECK_THROWS_AS((void)loss_weighted_l1(gt, constant(8, 16, 0.0), ones), ShapeError);
}

TEST_CASE("weighted Laplacian") {
  std::mt19937 rng(2);
  const auto gt = random_plane(rng, 32, 32);
  const auto ones = constant(32, 32, 1.0);
  CHECK(loss_weighted_laplacian(gt, gt, ones) == 0.0);

  // A constant offset only reaches the base level.
  auto shifted = gt;
  for (auto& v : shifted.data) v += 0.2;
  const double expect = 0.2 * 16.0 * (2.0 * 2.0) / (32.0 * 32.0);
  CHECK(loss_weighted_laplacian(shifted, gt, ones, 4) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(laplacian_oracle(shifted, gt, ones, 4) == doctest::Approx(expect).epsilon(1e-9));

  for (int t = 0; t < 50; ++t) {
    const int w = 8 << (t % 3);
    const int h = 8 << ((t / 3) % 3);
    const auto p = random_plane(rng, w, h);
    const auto g = random_plane(rng, w, h);
    auto wt = random_plane(rng, w, h);
    for (auto& v : wt.data) v = v > 0.3 ? 1.0 : 0.0;
    const int levels = max_pyramid_levels(w, h);
    REQUIRE(loss_weighted_laplacian(p, g, wt) == doctest::Approx(laplacian_oracle(p, g, wt, levels)).epsilon(1e-12));
    REQUIRE(loss_weighted_laplacian(p, g, wt, 1) == doctest::Approx(laplacian_oracle(p, g, wt, 1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)loss_weighted_laplacian(gt, gt, ones, 6), ConfigError);
}

TEST_CASE("loss gradients, 64-bit") {
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937 rng(300 + seed);
    const int h = 8 << (seed % 2);
    const int w = 16;
    auto pred = random_tensor(rng, {2, 1, h, w}, true, 0.0, 1.0);
    const auto gt = random_tensor(rng, {2, 1, h, w}, false, 0.0, 1.0);
    auto wt = random_tensor(rng, {2, 1, h, w}, false, 0.0, 1.0);
    for (auto& v : wt.mutable_values()) v = v > 0.25 ? 1.0 : 0.0;
    const auto l1 = gradcheck([&] { return weighted_l1(pred, gt, wt); }, {pred}, rng);
    const auto lap = gradcheck([&] { return weighted_laplacian(pred, gt, wt); }, {pred}, rng);
    INFO("seed " << seed);
    CHECK(l1.max_rel_error < 1e-4);
    CHECK(lap.max_rel_error < 1e-4);
  }
}

TEST_CASE("total loss") {
  std::mt19937 rng(4);
  const auto gt = soft_disk(32, 16, 16, 8, 4);
  m2m::MultiScalePrediction exact{resize_area(gt, 4, 4), resize_area(gt, 8, 8), gt};
  WeightMaps ones{constant(4, 4, 1), constant(8, 8, 1), constant(32, 32, 1)};
  CHECK(total_loss(exact, gt, ones, {}) < 1e-15);

  m2m::MultiScalePrediction noisy{random_plane(rng, 4, 4), random_plane(rng, 8, 8), random_plane(rng, 32, 32)};
  BinaryMask mask(32, 32);
  for (int y = 8; y < 24; ++y)
    for (int x = 8; x < 24; ++x) mask(x, y) = 1;
  TrainConfig cfg;
  const auto maps = weight_maps_for_iteration(cfg.warmup_iterations, cfg, mask, noisy.os4);

  const double l1_only = total_loss(noisy, gt, maps, LossWeights{1.0, 0.0});
  const double by_hand = loss_weighted_l1(noisy.os8, resize_area(gt, 4, 4), maps.w_os8) +
                         loss_weighted_l1(noisy.os4, resize_area(gt, 8, 8), maps.w_os4) +
                         loss_weighted_l1(noisy.os1, gt, maps.w_os1);
  CHECK(l1_only == doctest::Approx(by_hand).epsilon(1e-12));
  const double base = total_loss(noisy, gt, maps, LossWeights{1.0, 1.0});
  CHECK(base > l1_only);
  CHECK(total_loss(noisy, gt, maps, LossWeights{2.0, 2.0}) == doctest::Approx(2.0 * base).epsilon(1e-12));
  CHECK(total_loss(noisy, gt, maps, LossWeights{0.0, 0.0}) == 0.0);
}

TEST_CASE("loss gradient through the network, 64-bit") {
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937 rng(400 + seed);
    m2m::MattingModel<double> model(m2m::toy_config(seed));
    for (auto& [path, p] : model.params())
      if (path.ends_with("/gate")) p.mutable_values()[0] = 0.3;
    const auto img = random_tensor(rng, {2, 3, 16, 16}, false, 0.0, 1.0);
    auto mask = random_tensor(rng, {2, 1, 16, 16}, false, 0.0, 1.0);
    for (auto& v : mask.mutable_values()) v = v > 0.5 ? 1.0 : 0.0;
    const auto gt = random_tensor(rng, {2, 1, 16, 16}, false, 0.0, 1.0);
    TrainConfig cfg;
    cfg.warmup_iterations = 0;
    std::vector<WeightMaps> maps;
    {
      ad::NoGradGuard guard;
      const auto o = model.forward(img, mask, true);
      for (int b = 0; b < 2; ++b) {
        BinaryMask m(16, 16);
        for (int i = 0; i < 256; ++i) m.data[i] = mask.at(b * 256 + i) > 0.5;
        maps.push_back(weight_maps_for_iteration(0, cfg, m, plane_of(o.os4, b)));
      }
    }
    auto loss = [&] {
      const auto o = model.forward(img, mask, true);
      return total_loss(o.os8, o.os4, o.os1, gt, maps, LossWeights{});
    };
    std::vector<ad::Tensor<double>> inputs;
    for (auto& [path, p] : model.params()) inputs.push_back(p);
    const auto res = gradcheck_steps(loss, inputs, rng, 4, {1e-5, 1e-6, 1e-7}, 1e-3);
    INFO("seed " << seed << " input " << res.worst_input << " analytic " << res.worst_analytic << " numeric "
                  << res.worst_numeric);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("synthesized samples") {
  // Hard-edged instance over a flat background.
  InstanceRecord inst;
  inst.source = "square";
  inst.foreground = ImageRGB(40, 40);
  inst.alpha = AlphaMatte(40, 40);
  for (int y = 10; y < 30; ++y)
    for (int x = 12; x < 28; ++x) inst.alpha(x, y) = 1.0;
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      inst.foreground.at(0, x, y) = 0.9;
      inst.foreground.at(1, x, y) = 0.1;
      inst.foreground.at(2, x, y) = 0.25;
    }
  ImageRGB bg(50, 30, 0.4);
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto s = synthesize_sample(inst, bg, 32, rng);
    REQUIRE(s.image.width == 32);
    REQUIRE(s.alpha.width == 32);
    REQUIRE(s.mask.width == 32);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const double a = s.alpha(x, y);
        if (a == 1.0) REQUIRE(std::abs(s.image.at(0, x, y) - 0.9) < 1e-12);
        if (a == 0.0) REQUIRE(std::abs(s.image.at(0, x, y) - 0.4) < 1e-12);
        REQUIRE(std::abs(s.image.at(1, x, y) - (a * 0.1 + (1 - a) * 0.4)) < 1e-12);
      }
    // Tight box by scan.
    int x0 = 99, y0 = 99, x1 = -1, y1 = -1;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (s.alpha(x, y) > 0) {
          x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x + 1), y1 = std::max(y1, y + 1);
        }
    CHECK(s.box == Box{x0, y0, x1, y1});
  }

  // A soft disk at unit scale: its box spans the outermost nonzero radius.
  SynthesisOptions unit;
  unit.scale_min = unit.scale_max = 1.0;
  InstanceRecord disk{ImageRGB(48, 48, 0.7), soft_disk(48, 24.5, 24.5, 9.0, 4.0), "disk"};
  int r_out = 0;
  for (int x = 24; x < 48; ++x)
    if (disk.alpha(x, 24) > 0) r_out = x - 24;
  std::mt19937_64 rng(3);
  const auto s = synthesize_sample(disk, bg, 48, rng, unit);
  CHECK(s.box.width() == 2 * r_out + 1);
  CHECK(s.box.height() == 2 * r_out + 1);

  // Same stream, same sample.
  std::mt19937_64 a(9), b(9);
  const auto sa = synthesize_sample(disk, bg, 48, a);
  const auto sb = synthesize_sample(disk, bg, 48, b);
  CHECK(sa.image.data == sb.image.data);
  CHECK(sa.mask == sb.mask);
  CHECK(sa.alpha == sb.alpha);
}

TEST_CASE("oversized instances shrink, then fail") {
  InstanceRecord big{ImageRGB(100, 100, 0.5), AlphaMatte(100, 100, 1.0), "big"};
  SynthesisOptions unit;
  unit.scale_min = unit.scale_max = 1.0;
  std::mt19937_64 rng(1);
  const auto s = synthesize_sample(big, ImageRGB(64, 64, 0.1), 64, rng, unit);
  CHECK(s.box.width() <= 64);
  InstanceRecord huge{ImageRGB(1000, 1000, 0.5), AlphaMatte(1000, 1000, 1.0), "huge"};
  CHECK_THROWS_AS((void)synthesize_sample(huge, ImageRGB(16, 16, 0.1), 16, rng, unit), ShapeError);
  InstanceRecord empty{ImageRGB(8, 8, 0.5), AlphaMatte(8, 8, 0.0), "empty"};
  CHECK_THROWS_AS((void)synthesize_sample(empty, ImageRGB(16, 16, 0.1), 16, rng), ShapeError);
}

TEST_CASE("synthetic corpus") {
  TempDir dir("corpus");
  write_synthetic_corpus(dir.path(), CorpusOptions{8, 3, 64, 7});
  const auto corpus = load_corpus(dir.path());
  CHECK(corpus.train.size() == 5);
  CHECK(corpus.backgrounds.size() == 8);
  CHECK(corpus.test_names.size() == 3);
  for (const auto& inst : corpus.train) {
    REQUIRE(bounding_box(inst.alpha));
    const auto box = *bounding_box(inst.alpha);
    CHECK(box.valid_in(64, 64));
    CHECK(box.x0 > 0);
    CHECK(box.x1 < 64);
    int soft = 0;
    for (double a : inst.alpha.data) soft += a > 0.0 && a < 1.0;
    CHECK(soft > 20);
  }
  // Same seed reproduces the files.
  TempDir again("corpus2");
  write_synthetic_corpus(again.path(), CorpusOptions{8, 3, 64, 7});
  CHECK(read_file(dir.path() / "alpha" / "blob_0002.png") == read_file(again.path() / "alpha" / "blob_0002.png"));
  CHECK(read_file(dir.path() / "manifest.json") == read_file(again.path() / "manifest.json"));

  std::vector<std::string> skipped;
  const auto items = load_eval_items(dir.path(), &skipped);
  REQUIRE(items.size() == 3);
  CHECK(skipped.empty());
  CHECK(items[0].name == "blob_0005");
  CHECK(items[0].instances.size() == 1);
  // The stored composite matches compositing the stored layers (8-bit).
  const auto fg = read_png_rgb(dir.path() / "fg" / "blob_0005.png");
  const auto bg = read_png_rgb(dir.path() / "bg" / "bg_0005.png");
  const auto comp = composite(fg, bg, items[0].instances[0]);
  double worst = 0.0;
  for (std::size_t i = 0; i < comp.data.size(); ++i) worst = std::max(worst, std::abs(comp.data[i] - items[0].image.data[i]));
  CHECK(worst < 2.0 / 255.0);

  std::filesystem::remove(dir.path() / "alpha" / "blob_0006.png");
  skipped.clear();
  CHECK(load_eval_items(dir.path(), &skipped).size() == 2);
  CHECK(skipped == std::vector<std::string>{"blob_0006"});
  CHECK_THROWS_AS((void)load_corpus(dir.path() / "missing"), IoError);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("ckpt");
  m2m::MattingModel<float> model(m2m::toy_config(4));
  ad::AdamState<float> adam;
  adam.step = 3;
  for (const auto& [path, p] : model.params()) {
    adam.first_moment[path].assign(p.numel(), 0.25f);
    adam.second_moment[path].assign(p.numel(), 0.5f);
  }
  const auto ckpt = capture_checkpoint(model, &adam, 17, nlohmann::json{{"note", 1}});
  const auto path = dir.path() / "a.mam";
  save_checkpoint(path, ckpt);
  const auto loaded = load_checkpoint(path);
  save_checkpoint(dir.path() / "b.mam", loaded);
  CHECK(read_file(path) == read_file(dir.path() / "b.mam"));
  CHECK(loaded.iteration() == 17);
  CHECK(loaded.model_config().widths == m2m::toy_config().widths);

  m2m::MattingModel<float> other(m2m::toy_config(99));
  ad::AdamState<float> adam2;
  CHECK(restore_checkpoint(loaded, other, &adam2) == 17);
  for (const auto& [p, t] : model.params()) REQUIRE(std::equal(t.values().begin(), t.values().end(), other.params().at(p).values().begin()));
  for (const auto& [p, t] : model.buffers()) REQUIRE(std::equal(t.values().begin(), t.values().end(), other.buffers().at(p).values().begin()));
  CHECK(adam2.step == 3);
  CHECK(adam2.first_moment == adam.first_moment);
  CHECK(adam2.second_moment == adam.second_moment);

  // Truncations anywhere are corruption, never a crash.
  const auto bytes = read_file(path);
  for (std::size_t cut : {std::size_t(0), std::size_t(5), std::size_t(19), std::size_t(40), bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + cut);
    CHECK_THROWS_AS((void)parse_checkpoint(part), CorruptionError);
  }
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS((void)parse_checkpoint(bad), CorruptionError);
  bad = bytes;
  bad[8] = 9;  // version
  CHECK_THROWS_AS((void)parse_checkpoint(bad), CorruptionError);

  // A model with other widths rejects it, naming the tensor.
  auto wide = m2m::toy_config(4);
  wide.widths = {16, 8, 16};
  m2m::MattingModel<float> mismatched(wide);
  try {
    restore_checkpoint(loaded, mismatched);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("m2m/os1/") != std::string::npos);
  }
  // A mutated header shape is caught the same way.
  auto mutated = loaded;
  for (auto& e : mutated.entries)
    if (e.path == "m2m/os4/head/weight") {
      e.shape = {1, 8 * 9};
    }
  const auto reparsed = parse_checkpoint(serialize_checkpoint(mutated));
  try {
    restore_checkpoint(reparsed, other);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("m2m/os4/head/weight") != std::string::npos);
  }
  CHECK_THROWS_AS((void)load_checkpoint(dir.path() / "nope.mam"), IoError);
}

TEST_CASE("training: empty run, learning, reproducibility, resume") {
  const auto corpus = small_corpus(12, 1);

  SUBCASE("total = 0 writes the initial parameters") {
    TempDir dir("train0");
    auto cfg = tiny_run(dir.path(), 0, 0);
    const auto result = train_run(cfg, &corpus);
    CHECK(result.log.empty());
    CHECK(result.checkpoint_path.filename() == kFinalCheckpoint);
    const auto ckpt = load_checkpoint(result.checkpoint_path);
    CHECK(ckpt.iteration() == 0);
    m2m::MattingModel<float> fresh(cfg.model);
    for (const auto& [path, p] : fresh.params()) {
      const auto* e = ckpt.find(path);
      REQUIRE(e);
      REQUIRE(std::equal(e->f32.begin(), e->f32.end(), p.values().begin()));
    }
  }

  SUBCASE("50 iterations reduce the loss") {
    TempDir dir("train50");
    auto cfg = tiny_run(dir.path(), 50, 5);
    cfg.batch_size = 8;
    const auto result = train_run(cfg, &corpus);
    REQUIRE(result.log.size() == 50);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 10; ++i) {
      first += result.log[i].loss;
      last += result.log[40 + i].loss;
    }
    MESSAGE("first-10 mean " << first / 10 << ", last-10 mean " << last / 10);
    CHECK(last < first);
    CHECK(read_log(dir.path() / kTrainLog).size() == 50);
  }

  SUBCASE("identical seeds, identical runs; resume equals uninterrupted") {
    TempDir a("trainA"), b("trainB"), c("trainC");
    auto cfg_a = tiny_run(a.path(), 12, 4);
    cfg_a.checkpoint_every = 5;
    auto cfg_b = cfg_a;
    cfg_b.output_dir = b.path();
    const auto ra = train_run(cfg_a, &corpus);
    const auto rb = train_run(cfg_b, &corpus);
    CHECK(loss_lr(ra.log) == loss_lr(rb.log));
    CHECK(read_file(a.path() / kTrainLog) == read_file(b.path() / kTrainLog));
    CHECK(read_file(ra.checkpoint_path) == read_file(rb.checkpoint_path));
    CHECK(read_file(a.path() / periodic_checkpoint_name(10)) == read_file(b.path() / periodic_checkpoint_name(10)));

    auto cfg_c = cfg_a;
    cfg_c.output_dir = c.path();
    TrainHooks stop;
    stop.stop_at = 5;
    const auto partial = train_run(cfg_c, &corpus, stop);
    CHECK(partial.log.size() == 5);
    CHECK(partial.checkpoint_path.filename() == periodic_checkpoint_name(5));
    cfg_c.resume = c.path() / periodic_checkpoint_name(5);
    const auto rest = train_run(cfg_c, &corpus);
    CHECK(rest.log.size() == 7);
    CHECK(loss_lr(read_log(c.path() / kTrainLog)) == loss_lr(ra.log));
    CHECK(read_file(c.path() / kTrainLog) == read_file(a.path() / kTrainLog));
    CHECK(read_file(rest.checkpoint_path) == read_file(ra.checkpoint_path));
  }

  SUBCASE("a non-finite loss aborts naming the iteration") {
    TempDir dir("trainnan");
    auto bad = corpus;
    for (auto& inst : bad.train) std::fill(inst.foreground.data.begin(), inst.foreground.data.end(), std::nan(""));
    auto cfg = tiny_run(dir.path(), 5, 1);
    try {
      train_run(cfg, &bad);
      FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
      CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
  }
}
