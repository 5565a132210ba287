#include "mam/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mam/ad/ops.hpp"
#include "mam/core/convert.hpp"
#include "mam/core/png_io.hpp"
#include "mam/errors.hpp"
#include "mam/train/loss.hpp"
#include "mam/train/sample.hpp"

namespace mam::train {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const LogRecord& r) {
  return json{{"iter", r.iter}, {"loss", r.loss}, {"lr", r.lr}};
}

std::vector<LogRecord> read_log(const fs::path& path) {
  std::vector<LogRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back(LogRecord{j.at("iter"), j.at("loss"), j.at("lr")});
    } catch (const json::exception& e) {
      throw CorruptionError(fmt::format("{}: bad log line: {}", path.string(), e.what()));
    }
  }
  return out;
}

fs::path periodic_checkpoint_name(int iteration) { return fmt::format("checkpoint_{:06d}.mam", iteration); }

json config_snapshot(const TrainConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("dataset");
  j.erase("output_dir");
  j.erase("resume");
  return j;
}

namespace {

std::mt19937_64 sample_stream(std::uint64_t seed, int iter, int index) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(iter), std::uint32_t(index)};
  return std::mt19937_64(seq);
}

std::vector<TrainingSample> synthesize_batch(const Corpus& corpus, const TrainConfig& cfg, int iter) {
  std::vector<TrainingSample> batch(cfg.batch_size);
  SynthesisOptions opt;
  opt.oracle = cfg.oracle;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < cfg.batch_size; ++b) {
    try {
      auto rng = sample_stream(cfg.seed, iter, b);
      const auto& inst = corpus.train[std::uniform_int_distribution<std::size_t>(0, corpus.train.size() - 1)(rng)];
      const auto& bg =
          corpus.backgrounds[std::uniform_int_distribution<std::size_t>(0, corpus.backgrounds.size() - 1)(rng)];
      batch[b] = synthesize_sample(inst, bg, cfg.crop_size, rng, opt);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return batch;
}

void write_log(const fs::path& path, const std::vector<LogRecord>& records) {
  std::string text;
  for (const auto& r : records) text += to_json(r).dump() + "\n";
  write_file(path, text);
}

}  // namespace

TrainResult train_run(const TrainConfig& cfg, const Corpus* corpus, const TrainHooks& hooks) {
  cfg.validate();
  Corpus loaded;
  if (!corpus) {
    if (cfg.dataset.empty()) throw ConfigError("train: no dataset given");
    loaded = load_corpus(cfg.dataset);
    corpus = &loaded;
  }
  fs::create_directories(cfg.output_dir);

  m2m::MattingModel<float> model(cfg.model);
  ad::AdamState<float> adam;
  int start = 0;
  const auto log_path = cfg.output_dir / kTrainLog;
  std::vector<LogRecord> history;
  if (!cfg.resume.empty()) {
    const auto ckpt = load_checkpoint(cfg.resume);
    if (ckpt.model_config().widths != cfg.model.widths ||
        ckpt.model_config().feature_channels != cfg.model.feature_channels) {
      throw ShapeError(fmt::format("resume checkpoint '{}' was trained with a different model config",
                                   cfg.resume.string()));
    }
    start = int(restore_checkpoint(ckpt, model, &adam));
    for (const auto& r : read_log(log_path))
      if (r.iter < start) history.push_back(r);
    spdlog::info("resuming from '{}' at iteration {}", cfg.resume.string(), start);
  }
  write_log(log_path, history);

  const auto snapshot = config_snapshot(cfg);
  auto save = [&](int iteration, const fs::path& name) {
    auto ckpt = capture_checkpoint(model, &adam, iteration, snapshot);
    save_checkpoint(cfg.output_dir / name, ckpt);
    return ckpt;
  };

  TrainResult result;
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw IoError(fmt::format("cannot open training log '{}'", log_path.string()));
  const int stop = std::min(cfg.total_iterations, hooks.stop_at.value_or(cfg.total_iterations));
  const auto t0 = std::chrono::steady_clock::now();
  ad::AdamOptions opt{0.0, cfg.beta1, cfg.beta2, 1e-8};
  for (int iter = start; iter < stop; ++iter) {
    const auto batch = synthesize_batch(*corpus, cfg, iter);
    std::vector<const ImageRGB*> images;
    std::vector<const BinaryMask*> masks;
    std::vector<const AlphaMatte*> alphas;
    for (const auto& s : batch) {
      images.push_back(&s.image);
      masks.push_back(&s.mask);
      alphas.push_back(&s.alpha);
    }
    const auto x = stack_images<float>(images);
    const auto m = stack_planes<float>(masks);
    const auto gt = stack_planes<float>(alphas);

    const auto out = model.forward(x, m, true);
    std::vector<WeightMaps> maps;
    for (int b = 0; b < cfg.batch_size; ++b) {
      maps.push_back(weight_maps_for_iteration(iter, cfg, batch[b].mask, plane_of(out.os4, b)));
    }
    const auto loss = total_loss(out.os8, out.os4, out.os1, gt, maps, cfg.loss);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw TrainingError(fmt::format("non-finite loss ({}) at iteration {}", value, iter));
    }
    model.params().zero_grad();
    ad::backward(loss);
    opt.lr = lr_at(iter, cfg);
    ad::adam_step(model.params(), adam, opt);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    LogRecord rec{iter, value, opt.lr, seconds};
    log << to_json(rec).dump() << '\n' << std::flush;
    result.log.push_back(rec);
    if (hooks.on_step) hooks.on_step(rec);
    if (iter % 100 == 0) spdlog::info("iter {:6d}  loss {:.5f}  lr {:.2e}  {:.1f}s", iter, value, opt.lr, seconds);

    const int done = iter + 1;
    if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 && done < cfg.total_iterations) {
      save(done, periodic_checkpoint_name(done));
    }
  }

  const int reached = std::max(start, stop);
  if (reached < cfg.total_iterations) {
    result.checkpoint_path = cfg.output_dir / periodic_checkpoint_name(reached);
  } else {
    result.checkpoint_path = cfg.output_dir / kFinalCheckpoint;
  }
  result.checkpoint = save(reached, result.checkpoint_path.filename());
  return result;
}

}  // namespace mam::train
