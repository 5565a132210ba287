#include "mam/metrics/evaluate.hpp"

#include <algorithm>
#include <exception>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mam/core/morphology.hpp"
#include "mam/errors.hpp"
#include "mam/guidance/import.hpp"

namespace mam::metrics {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& metric_keys() {
  static const std::vector<std::string> keys = {"sad_all", "mad_all",  "mse_all",  "grad_all", "conn_all",
                                                "sad_tri", "mad_tri",  "mse_tri",  "grad_tri", "conn_tri",
                                                "imq_mad", "imq_mse"};
  return keys;
}

Point interior_point(const BinaryMask& mask) {
  BinaryMask outside(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) outside.data[i] = !mask.data[i];
  const auto d2 = squared_distance_to(outside);
  int best_x = -1, best_y = -1;
  double best = -1.0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask(x, y)) continue;
      // Pixels on the frame edge are one step from the (virtual) outside.
      const double edge = std::min({x + 1, y + 1, mask.width - x, mask.height - y});
      const double v = std::min(d2(x, y), edge * edge);
      if (v > best) best = v, best_x = x, best_y = y;
    }
  if (best_x < 0) throw SelectionError("interior_point: empty mask");
  return Point{best_x + 0.5, best_y + 0.5};
}

json MetricReport::to_json() const {
  json j_items = json::array();
  for (const auto& it : items) {
    json row{{"name", it.name}, {"instances", it.instances}};
    for (const auto& [k, v] : it.values) row[k] = v;
    j_items.push_back(row);
  }
  json agg = json::object();
  for (const auto& [k, v] : aggregate) agg[k] = v;
  return json{{"config", config},
              {"items", j_items},
              {"aggregate", agg},
              {"counts", {{"images", items.size()}, {"instances", instance_count}, {"skipped", skipped.size()}}},
              {"skipped", skipped}};
}

std::string MetricReport::table() const {
  std::string out = fmt::format("{:<16}", "name");
  for (const auto& k : metric_keys()) out += fmt::format(" {:>10}", k);
  out += "\n";
  auto row = [&](const std::string& name, const std::map<std::string, double>& values) {
    std::string line = fmt::format("{:<16}", name.substr(0, 16));
    for (const auto& k : metric_keys()) {
      const auto it = values.find(k);
      line += it == values.end() ? fmt::format(" {:>10}", "-") : fmt::format(" {:>10.4f}", it->second);
    }
    return line + "\n";
  };
  for (const auto& it : items) out += row(it.name, it.values);
  out += row("mean", aggregate);
  out += fmt::format("{} images, {} instances, {} skipped\n", items.size(), instance_count, skipped.size());
  return out;
}

namespace {

struct Outcome {
  ItemReport report;
  std::vector<std::string> skipped;
};

Outcome evaluate_one(const train::EvalItem& item, std::size_t index, const infer::Refiner& refiner,
                     const EvalConfig& cfg, const fs::path& guidance_root) {
  Outcome out;
  out.report.name = item.name;
  std::vector<guidance::MaskCandidate> candidates;
  std::optional<guidance::FeatureMap> features;
  if (!guidance_root.empty() && fs::is_directory(guidance_root / item.name)) {
    auto g = guidance::load_guidance(guidance_root / item.name);
    candidates = std::move(g.candidates);
    const int expect = cfg.inference.target / 16;
    if (g.features && g.features->height() == expect && g.features->width() == expect) {
      features = std::move(g.features);
    } else if (g.features) {
      spdlog::warn("eval item '{}': imported features are not {}x{}, using the encoder", item.name, expect, expect);
    }
  } else {
    auto oracle = cfg.oracle;
    oracle.seed = cfg.oracle.seed + index;
    candidates = guidance::oracle_candidates(item.instances, oracle);
  }

  std::vector<AlphaMatte> mattes;
  std::vector<AlphaMatte> gts;
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  auto add = [&](const std::string& k, double v) {
    sums[k] += v;
    counts[k] += 1;
  };
  for (std::size_t k = 0; k < item.instances.size(); ++k) {
    const auto& gt = item.instances[k];
    const auto mask = binarize(gt, 0.5);
    std::optional<Box> box = item.boxes ? std::optional<Box>((*item.boxes)[k]) : bounding_box(gt);
    if (!box || mask_area(mask) == 0) {
      spdlog::warn("eval item '{}': instance {} has no foreground, skipped", item.name, k);
      out.skipped.push_back(fmt::format("{}#{}", item.name, k));
      continue;
    }
    const auto prompt = cfg.prompt == PromptMode::Box ? guidance::Prompt::from_box(*box)
                                                      : [&] {
                                                          const auto p = interior_point(mask);
                                                          return guidance::Prompt::from_point(p.x, p.y);
                                                        }();
    auto result = infer::matte_from_prompt(item.image, prompt, candidates, refiner, cfg.inference,
                                           features ? &*features : nullptr);
    const auto& pred = result.matte;
    const auto all = pixel_errors(pred, gt, RegionSpec::all());
    add("sad_all", all.sad);
    add("mad_all", all.mad);
    add("mse_all", all.mse);
    add("grad_all", grad_error(pred, gt, RegionSpec::all()));
    add("conn_all", conn_error(pred, gt, RegionSpec::all()));
    const auto tri_mask = region_mask(gt, RegionSpec::tri());
    if (mask_area(tri_mask) > 0) {
      const auto tri = pixel_errors(pred, gt, RegionSpec::tri());
      add("sad_tri", tri.sad);
      add("mad_tri", tri.mad);
      add("mse_tri", tri.mse);
      add("grad_tri", grad_error(pred, gt, RegionSpec::tri()));
      add("conn_tri", conn_error(pred, gt, RegionSpec::tri()));
    }
    mattes.push_back(pred);
    gts.push_back(gt);
  }
  out.report.instances = int(gts.size());
  if (gts.empty()) return out;
  for (const auto& [k, v] : sums) out.report.values[k] = v / counts[k];
  auto imq_cfg = cfg.imq;
  imq_cfg.similarity = Similarity::Mad;
  out.report.values["imq_mad"] = imq(mattes, gts, imq_cfg);
  imq_cfg.similarity = Similarity::Mse;
  out.report.values["imq_mse"] = imq(mattes, gts, imq_cfg);
  return out;
}

json config_json(const EvalConfig& cfg) {
  const auto policy = cfg.inference.policy();
  return json{{"prompt", cfg.prompt == PromptMode::Box ? "box" : "point"},
              {"policy", policy.base == infer::MergeBase::FromMask ? "mask" : "os8"},
              {"target", cfg.inference.target},
              {"r4", policy.r4},
              {"r1", policy.r1},
              {"oracle", {{"r_max", cfg.oracle.r_max}, {"jitter", cfg.oracle.jitter}, {"seed", cfg.oracle.seed}}},
              {"imq", {{"threshold", cfg.imq.threshold}, {"tau", cfg.imq.tau}}}};
}

}  // namespace

MetricReport evaluate_items(const std::vector<train::EvalItem>& items, const infer::Refiner& refiner,
                            const EvalConfig& cfg, const fs::path& guidance_root) {
  cfg.inference.validate();
  std::vector<const train::EvalItem*> order;
  for (const auto& it : items) order.push_back(&it);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->name < b->name; });

  std::vector<Outcome> outcomes(order.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < order.size(); ++i) {
    try {
      outcomes[i] = evaluate_one(*order[i], i, refiner, cfg, guidance_root);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  MetricReport report;
  report.config = config_json(cfg);
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  for (auto& o : outcomes) {
    report.skipped.insert(report.skipped.end(), o.skipped.begin(), o.skipped.end());
    if (o.report.instances == 0) {
      report.skipped.push_back(o.report.name);
      continue;
    }
    report.instance_count += o.report.instances;
    for (const auto& [k, v] : o.report.values) {
      sums[k] += v;
      counts[k] += 1;
    }
    report.items.push_back(std::move(o.report));
  }
  for (const auto& [k, v] : sums) report.aggregate[k] = v / counts[k];
  return report;
}

MetricReport evaluate_dataset(const fs::path& dataset, const infer::Refiner& refiner, const EvalConfig& cfg) {
  std::vector<std::string> skipped;
  const auto items = train::load_eval_items(dataset, &skipped);
  auto report = evaluate_items(items, refiner, cfg, dataset / "guidance");
  report.skipped.insert(report.skipped.begin(), skipped.begin(), skipped.end());
  return report;
}

}  // namespace mam::metrics
