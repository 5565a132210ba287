#include <doctest.h>

#include <algorithm>
#include <deque>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "mam/core/morphology.hpp"
#include "mam/core/png_io.hpp"
#include "mam/core/resize.hpp"
#include "mam/errors.hpp"
#include "mam/metrics/evaluate.hpp"
#include "mam/metrics/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mam;
using namespace mam::metrics;
using namespace mam::testing::oracles;
using mam::testing::TempDir;

namespace {

AlphaMatte disk(int w, int h, double cx, double cy, double r) {
  AlphaMatte a(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) a(x, y) = std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r ? 1.0 : 0.0;
  return a;
}

// Gaussian derivative filtering by the textbook formula, replicate borders.
Plane grad_magnitude_oracle(const Plane& p, double sigma) {
  const double eps = 0.01;
  const int half = int(std::ceil(sigma * std::sqrt(-2.0 * std::log(std::sqrt(2.0 * std::numbers::pi) * sigma * eps))));
  std::vector<std::vector<double>> k(2 * half + 1, std::vector<double>(2 * half + 1));
  double norm = 0.0;
  for (int j = -half; j <= half; ++j)
    for (int i = -half; i <= half; ++i) {
      const double g = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
      k[j + half][i + half] = -i * g;
      norm += i * i * g * g;
    }
  norm = std::sqrt(norm);
  Plane out(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int j = -half; j <= half; ++j)
        for (int i = -half; i <= half; ++i) {
          const double v = p(std::clamp(x + i, 0, p.width - 1), std::clamp(y + j, 0, p.height - 1));
          gx += k[j + half][i + half] / norm * v;
          gy += k[i + half][j + half] / norm * v;
        }
      out(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  return out;
}

double grad_oracle(const Plane& pred, const Plane& gt, const BinaryMask& region) {
  const auto a = grad_magnitude_oracle(pred, 1.4), b = grad_magnitude_oracle(gt, 1.4);
  double s = 0.0;
  for (std::size_t i = 0; i < region.size(); ++i)
    if (region.data[i]) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return s * 1e-3;
}

// Largest 4-connected component by breadth-first flood fill.
BinaryMask largest_component_oracle(const BinaryMask& m) {
  Grid<int> label(m.width, m.height, 0);
  int best = 0, next = 0;
  std::size_t best_size = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m(x, y) || label(x, y)) continue;
      ++next;
      std::deque<std::pair<int, int>> q{{x, y}};
      label(x, y) = next;
      std::size_t size = 0;
      while (!q.empty()) {
        auto [u, v] = q.front();
        q.pop_front();
        ++size;
        for (auto [du, dv] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int a = u + du, b = v + dv;
          if (a < 0 || b < 0 || a >= m.width || b >= m.height || !m(a, b) || label(a, b)) continue;
          label(a, b) = next;
          q.push_back({a, b});
        }
      }
      if (size > best_size) best_size = size, best = next;
    }
  BinaryMask out(m.width, m.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = best != 0 && label.data[i] == best;
  return out;
}

double conn_oracle(const Plane& pred, const Plane& gt, const BinaryMask& region) {
  Plane level(pred.width, pred.height, 1.0);
  Grid<int> done(pred.width, pred.height, 0);
  for (int i = 1; i <= 10; ++i) {
    const double theta = i * 0.1;
    BinaryMask both(pred.width, pred.height);
    for (std::size_t p = 0; p < both.size(); ++p) both.data[p] = pred.data[p] >= theta && gt.data[p] >= theta;
    const auto omega = largest_component_oracle(both);
    for (std::size_t p = 0; p < both.size(); ++p)
      if (!done.data[p] && !omega.data[p]) {
        level.data[p] = (i - 1) * 0.1;
        done.data[p] = 1;
      }
  }
  double s = 0.0;
  for (std::size_t p = 0; p < region.size(); ++p) {
    if (!region.data[p]) continue;
    auto phi = [&](double a) {
      const double d = a - level.data[p];
      return 1.0 - (d >= 0.15 ? d : 0.0);
    };
    s += std::abs(phi(pred.data[p]) - phi(gt.data[p]));
  }
  return s * 1e-3;
}

class Echo final : public infer::Refiner {
 public:
  m2m::MultiScalePrediction refine(const ImageRGB&, const BinaryMask& mask,
                                   const guidance::FeatureMap*) const override {
    const int w = mask.width, h = mask.height;
    return {to_alpha(resize_mask(mask, w / 8, h / 8)), to_alpha(resize_mask(mask, w / 4, h / 4)), to_alpha(mask)};
  }
};

class Zeros final : public infer::Refiner {
 public:
  m2m::MultiScalePrediction refine(const ImageRGB& image, const BinaryMask&,
                                   const guidance::FeatureMap*) const override {
    const int w = image.width, h = image.height;
    return {AlphaMatte(w / 8, h / 8), AlphaMatte(w / 4, h / 4), AlphaMatte(w, h)};
  }
};

std::vector<train::EvalItem> two_hard_items() {
  std::vector<train::EvalItem> items;
  items.push_back({"b_two", ImageRGB(64, 64, 0.3), {disk(64, 64, 18, 20, 9), disk(64, 64, 44, 40, 11)}, {}});
  items.push_back({"a_one", ImageRGB(64, 64, 0.6), {disk(64, 64, 30, 30, 14)}, {}});
  return items;
}

metrics::EvalConfig exact_config() {
  metrics::EvalConfig cfg;
  cfg.inference.target = 64;
  cfg.inference.base = infer::MergeBase::FromMask;
  cfg.oracle.r_max = 0;
  cfg.oracle.jitter = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("pixel errors match a double loop") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> side(4, 16);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = side(rng), h = side(rng);
    auto pred = random_plane(rng, w, h), gt = random_plane(rng, w, h);
    // Some hard pixels so the band is not everywhere.
    for (auto& v : gt.data)
      if (v < 0.3) v = 0.0;
      else if (v > 0.7) v = 1.0;
    for (const bool tri : {false, true}) {
      BinaryMask region = tri ? band_oracle(gt, 1) : BinaryMask(w, h, 1);
      REQUIRE(region_mask(gt, tri ? RegionSpec::tri() : RegionSpec::all()) == region);
      if (mask_area(region) == 0) continue;
      double sa = 0.0, sq = 0.0;
      long n = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (region(x, y)) {
            const double d = pred(x, y) - gt(x, y);
            sa += std::abs(d);
            sq += d * d;
            ++n;
          }
      const auto e = pixel_errors(pred, gt, tri ? RegionSpec::tri() : RegionSpec::all());
      REQUIRE(std::abs(e.sad - sa / 1000.0) < 1e-9);
      REQUIRE(std::abs(e.mad - sa / n * 1000.0) < 1e-9);
      REQUIRE(std::abs(e.mse - sq / n * 1000.0) < 1e-9);
    }
  }
}

TEST_CASE("pixel error examples") {
  std::mt19937 rng(12);
  const auto gt = random_plane(rng, 20, 20, 0.0, 0.9);
  const auto same = pixel_errors(gt, gt);
  CHECK(same.sad == 0.0);
  CHECK(same.mad == 0.0);
  CHECK(same.mse == 0.0);

  auto shifted = gt;
  for (auto& v : shifted.data) v += 0.1;
  const auto e = pixel_errors(shifted, gt);
  CHECK(e.mad == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(e.mse == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(e.sad == doctest::Approx(400 * 0.1 / 1000.0).epsilon(1e-12));

  CHECK_THROWS_AS(pixel_errors(AlphaMatte(3, 3), AlphaMatte(4, 3)), ShapeError);
  CHECK_THROWS_WITH_AS(pixel_errors(AlphaMatte(8, 8), AlphaMatte(8, 8), RegionSpec::tri()),
                       doctest::Contains("tri"), ConfigError);
}

TEST_CASE("tri region ignores errors away from the band") {
  const auto gt = disk(48, 48, 24, 24, 8);
  auto pred = gt;
  pred(2, 2) = 0.7;
  pred(45, 3) = 0.2;
  CHECK(pixel_errors(pred, gt, RegionSpec::tri()).sad == 0.0);
  CHECK(grad_error(pred, gt, RegionSpec::tri()) == 0.0);
  CHECK(conn_error(pred, gt, RegionSpec::tri()) == 0.0);
  CHECK(pixel_errors(pred, gt).sad > 0.0);
  CHECK(grad_error(pred, gt) > 0.0);
  CHECK(default_band_radius(1024, 512) == 12);
  CHECK(default_band_radius(64, 64) == 1);
}

TEST_CASE("gradient error") {
  std::mt19937 rng(13);
  const auto g = gaussian_derivative(1.4);
  CHECK(g.half == 4);
  double n2 = 0.0;
  for (double v : g.dx) n2 += v * v;
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_derivative(0.0), ConfigError);

  const auto a = random_plane(rng, 24, 24);
  CHECK(grad_error(a, a) == 0.0);
  CHECK(grad_error(AlphaMatte(24, 24, 0.2), AlphaMatte(24, 24, 0.9)) < 1e-15);

  AlphaMatte step(32, 24), shifted(32, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      step(x, y) = x >= 14;
      shifted(x, y) = x >= 17;
    }
  const double e = grad_error(shifted, step);
  CHECK(e > 0.0);
  CHECK(e == doctest::Approx(grad_oracle(shifted, step, BinaryMask(32, 24, 1))).epsilon(1e-9));

  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_plane(rng, 12, 10), q = random_plane(rng, 12, 10);
    CHECK(grad_error(p, q) == doctest::Approx(grad_oracle(p, q, BinaryMask(12, 10, 1))).epsilon(1e-9));
  }
}

TEST_CASE("connectivity error") {
  std::mt19937 rng(14);
  const auto blob = disk(32, 32, 16, 16, 7);
  CHECK(conn_error(blob, blob) == 0.0);
  const auto a = random_plane(rng, 20, 20);
  CHECK(conn_error(a, a) == 0.0);

  auto satellite = blob;
  for (int y = 2; y < 6; ++y)
    for (int x = 25; x < 29; ++x) satellite(x, y) = 1.0;
  const double e = conn_error(satellite, blob);
  CHECK(e > 0.0);
  CHECK(e == doctest::Approx(conn_oracle(satellite, blob, BinaryMask(32, 32, 1))).epsilon(1e-12));

  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_plane(rng, 14, 12), q = random_plane(rng, 14, 12);
    REQUIRE(conn_error(p, q) == doctest::Approx(conn_oracle(p, q, BinaryMask(14, 12, 1))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(conn_error(a, a, {}, 0.0), ConfigError);
}

TEST_CASE("all error metrics are nonnegative") {
  std::mt19937 rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_plane(rng, 16, 16), q = random_plane(rng, 16, 16);
    const auto e = pixel_errors(p, q);
    CHECK(e.sad > 0.0);
    CHECK(e.mad > 0.0);
    CHECK(e.mse > 0.0);
    CHECK(grad_error(p, q) >= 0.0);
    CHECK(conn_error(p, q) >= 0.0);
  }
}

TEST_CASE("IMQ") {
  const std::vector<AlphaMatte> gts{disk(32, 32, 8, 8, 5), disk(32, 32, 24, 24, 6), disk(32, 32, 8, 24, 4)};
  CHECK(imq(gts, gts) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(imq({}, gts) == 0.0);
  CHECK(imq({}, {}) == 100.0);
  CHECK(imq({gts[0], gts[1]}, {gts[0]}) == doctest::Approx(200.0 / 3.0).epsilon(1e-9));
  CHECK(std::abs(imq({gts[0], gts[1]}, {gts[0]}) - 66.67) < 0.01);

  SUBCASE("quality falls off linearly with the error") {
    auto noisy = gts[0];
    for (std::size_t i = 0; i < noisy.size(); i += 2) noisy.data[i] = std::clamp(noisy.data[i] + 0.05, 0.0, 1.0);
    const double err = pixel_errors(noisy, gts[0]).mad * 1e-3;
    CHECK(imq({noisy}, {gts[0]}) == doctest::Approx(100.0 * (1.0 - err / 0.1)).epsilon(1e-9));
    IMQConfig mse;
    mse.similarity = Similarity::Mse;
    const double err2 = pixel_errors(noisy, gts[0]).mse * 1e-3;
    CHECK(imq({noisy}, {gts[0]}, mse) == doctest::Approx(100.0 * (1.0 - err2 / 0.1)).epsilon(1e-9));
  }
  SUBCASE("IoU must exceed the threshold") {
    AlphaMatte left(4, 1), right(4, 1);
    left.data = {1, 1, 1, 0};
    right.data = {0, 1, 1, 1};  // IoU 2/4
    CHECK(imq({left}, {right}) == 0.0);
    IMQConfig lower;
    lower.threshold = 0.49;
    lower.tau = 1.0;
    CHECK(imq({left}, {right}, lower) == doctest::Approx(50.0));
  }
  SUBCASE("permutation invariance") {
    std::mt19937 rng(16);
    std::vector<AlphaMatte> preds = gts;
    preds[1](24, 24) = 0.4;
    preds.push_back(disk(32, 32, 20, 6, 3));
    preds.push_back(disk(32, 32, 9, 9, 5));
    const double ref = imq(preds, gts);
    for (int k = 0; k < 100; ++k) {
      std::shuffle(preds.begin(), preds.end(), rng);
      REQUIRE(imq(preds, gts) == ref);
    }
  }
  SUBCASE("adding a false positive lowers the score, a true positive raises it") {
    const std::vector<AlphaMatte> some{gts[0], gts[1]};
    const double base = imq(some, gts);
    CHECK(imq({gts[0], gts[1], disk(32, 32, 28, 4, 3)}, gts) < base);
    CHECK(imq(gts, gts) > base);
  }
  IMQConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(imq(gts, gts, bad), ConfigError);
}

TEST_CASE("interior point") {
  const auto m = binarize(disk(40, 30, 12.5, 14.5, 6));
  const auto p = interior_point(m);
  CHECK(p.x == 12.5);
  CHECK(p.y == 14.5);
  BinaryMask edge(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 3; ++x) edge(x, y) = 1;
  CHECK(interior_point(edge).x == 1.5);
  CHECK_THROWS_AS(interior_point(BinaryMask(5, 5)), SelectionError);
}

TEST_CASE("evaluation with exact guidance and an echoing refiner") {
  const Echo echo;
  for (auto prompt : {PromptMode::Box, PromptMode::Point}) {
    auto cfg = exact_config();
    cfg.prompt = prompt;
    const auto report = evaluate_items(two_hard_items(), echo, cfg);
    REQUIRE(report.items.size() == 2);
    CHECK(report.items[0].name == "a_one");
    CHECK(report.instance_count == 3);
    CHECK(report.aggregate.at("sad_all") < 1e-12);
    CHECK(report.aggregate.at("mse_all") < 1e-12);
    CHECK(report.aggregate.at("mad_tri") < 1e-12);
    CHECK(report.aggregate.at("imq_mad") == doctest::Approx(100.0));
    CHECK(report.aggregate.at("imq_mse") == doctest::Approx(100.0));
  }
  const Zeros zeros;
  const auto report = evaluate_items(two_hard_items(), zeros, exact_config());
  CHECK(report.aggregate.at("imq_mad") == 0.0);
  CHECK(report.aggregate.at("sad_all") > 0.0);
}

TEST_CASE("evaluate_dataset reads the layout and aggregates the items") {
  TempDir dir("eval");
  const auto items = two_hard_items();
  std::filesystem::create_directories(dir.path() / "image");
  std::filesystem::create_directories(dir.path() / "alpha");
  std::filesystem::create_directories(dir.path() / "boxes");
  std::mt19937 rng(17);
  for (const auto& it : items) {
    write_png_rgb(dir.path() / "image" / (it.name + ".png"), it.image);
    for (std::size_t k = 0; k < it.instances.size(); ++k)
      write_png_gray(dir.path() / "alpha" / fmt::format("{}_{}.png", it.name, k), it.instances[k]);
  }
  write_file(dir.path() / "boxes" / "a_one.json", std::string("[[16,16,44,44]]"));
  write_png_rgb(dir.path() / "image" / "c_nogt.png", ImageRGB(64, 64, 0.1));

  const Echo echo;
  auto cfg = exact_config();
  cfg.oracle.r_max = 2;
  cfg.oracle.jitter = 0.2;
  const auto report = evaluate_dataset(dir.path(), echo, cfg);
  CHECK(report.items.size() == 2);
  CHECK(report.skipped == std::vector<std::string>{"c_nogt"});

  const auto j = nlohmann::json::parse(report.to_json().dump());
  CHECK(j["counts"]["images"] == 2);
  CHECK(j["counts"]["skipped"] == 1);
  CHECK(j["config"]["prompt"] == "box");
  for (const auto& key : metric_keys()) {
    double sum = 0.0;
    for (const auto& row : j["items"]) sum += row[key].get<double>();
    INFO(key);
    CHECK(std::abs(j["aggregate"][key].get<double>() - sum / 2.0) < 1e-9);
  }
  CHECK(j["aggregate"]["sad_all"].get<double>() > 0.0);

  const auto table = report.table();
  CHECK(table.find("a_one") != std::string::npos);
  CHECK(table.find("mean") != std::string::npos);
  CHECK(table.find("imq_mse") != std::string::npos);
}
