// mam: corpus synthesis, training, evaluation, single-image matting and the
// HTTP service.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mam/core/compositing.hpp"
#include "mam/core/png_io.hpp"
#include "mam/guidance/import.hpp"
#include "mam/metrics/evaluate.hpp"
#include "mam/service/http.hpp"
#include "mam/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace mam;
using nlohmann::json;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

// Raised for bad flag values found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, std::size_t n, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("{} expects {} comma-separated numbers, got '{}'", flag, n, text));
    }
  }
  if (out.size() != n) throw UsageError(fmt::format("{} expects {} comma-separated numbers, got '{}'", flag, n, text));
  return out;
}

infer::MergeBase parse_policy(const std::string& s) { return s == "mask" ? infer::MergeBase::FromMask : infer::MergeBase::FromOs8; }

struct LoadedModel {
  train::Checkpoint checkpoint;
  std::shared_ptr<const m2m::MattingModel<float>> model;
  int crop_size = 1024;
};

LoadedModel load_model(const fs::path& path) {
  LoadedModel m;
  m.checkpoint = train::load_checkpoint(path);
  m.model = train::model_from_checkpoint(m.checkpoint);
  const auto& cfg = m.checkpoint.config;
  if (cfg.contains("train") && cfg["train"].contains("crop_size")) m.crop_size = cfg["train"]["crop_size"].get<int>();
  return m;
}

// Without --target the network runs at the resolution it was trained at.
infer::InferenceConfig inference_config(const LoadedModel& m, int target, const std::string& policy) {
  infer::InferenceConfig cfg;
  cfg.target = target > 0 ? target : m.crop_size;
  cfg.base = parse_policy(policy);
  cfg.validate();
  return cfg;
}

struct SynthArgs {
  fs::path out;
  int count = 200, test_count = 20, size = 64;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  if (a.out.empty()) throw UsageError("synth needs --out or MAM_DATA_DIR");
  train::CorpusOptions opt;
  opt.count = a.count;
  opt.test_count = a.test_count;
  opt.size = a.size;
  opt.seed = a.seed;
  train::write_synthetic_corpus(a.out, opt);
  fmt::print("wrote {} instances ({} held out) to {}\n", a.count, a.test_count, a.out.string());
  return 0;
}

struct TrainArgs {
  fs::path config;
  fs::path data_dir;
  std::optional<int> total;
};

int run_train(const TrainArgs& a) {
  auto cfg = train::load_train_config(a.config);
  if (cfg.dataset.empty()) cfg.dataset = a.data_dir;
  if (a.total) {
    cfg.total_iterations = *a.total;
    cfg.warmup_iterations = std::min(cfg.warmup_iterations, std::max(0, *a.total - 1));
  }
  const auto result = train::train_run(cfg);
  fmt::print("{} iterations, checkpoint {}\n", result.checkpoint.iteration(), result.checkpoint_path.string());
  return 0;
}

struct EvalArgs {
  fs::path dataset, checkpoint, out = "report.json";
  std::string prompt = "box", policy = "os8";
  int target = 0;
};

int run_eval(const EvalArgs& a) {
  if (a.dataset.empty()) throw UsageError("eval needs --dataset or MAM_DATA_DIR");
  const auto m = load_model(a.checkpoint);
  metrics::EvalConfig cfg;
  cfg.prompt = a.prompt == "point" ? metrics::PromptMode::Point : metrics::PromptMode::Box;
  cfg.inference = inference_config(m, a.target, a.policy);
  const infer::NetworkRefiner refiner(m.model);
  const auto report = metrics::evaluate_dataset(a.dataset, refiner, cfg);
  std::cout << report.table();
  std::ofstream(a.out) << report.to_json().dump(2) << "\n";
  fmt::print("report written to {}\n", a.out.string());
  return 0;
}

struct MatteArgs {
  fs::path image, checkpoint, candidates, out, composite;
  std::string box, point, policy = "os8";
  std::vector<fs::path> alphas;
  int target = 0;
};

int run_matte(const MatteArgs& a) {
  if (a.box.empty() == a.point.empty()) throw UsageError("matte needs exactly one of --box or --point");
  const auto image = read_png_rgb(a.image);
  guidance::Prompt prompt;
  if (!a.box.empty()) {
    const auto v = parse_numbers(a.box, 4, "--box");
    prompt = guidance::Prompt::from_box(Box{int(std::lround(v[0])), int(std::lround(v[1])), int(std::lround(v[2])),
                                            int(std::lround(v[3]))});
  } else {
    const auto v = parse_numbers(a.point, 2, "--point");
    prompt = guidance::Prompt::from_point(v[0], v[1]);
  }

  std::vector<guidance::MaskCandidate> candidates;
  std::optional<guidance::FeatureMap> features;
  if (!a.candidates.empty()) {
    auto g = guidance::load_guidance(a.candidates);
    candidates = std::move(g.candidates);
    features = std::move(g.features);
  } else if (!a.alphas.empty()) {
    std::vector<AlphaMatte> gts;
    for (const auto& p : a.alphas) gts.push_back(read_png_gray(p));
    guidance::OracleConfig exact;
    exact.r_max = 0;
    exact.jitter = 0.0;
    candidates = guidance::oracle_candidates(gts, exact);
  } else {
    spdlog::warn("no --candidates or --alpha given; using the built-in low-quality proposer");
    candidates = guidance::propose_candidates(image);
  }

  const auto m = load_model(a.checkpoint);
  const auto cfg = inference_config(m, a.target, a.policy);
  if (features && (features->width() != cfg.target / 16 || features->height() != cfg.target / 16)) {
    spdlog::warn("imported features do not match target {}; recomputing", cfg.target);
    features.reset();
  }
  const infer::NetworkRefiner refiner(m.model);
  const auto res = infer::matte_from_prompt(image, prompt, candidates, refiner, cfg, features ? &*features : nullptr);
  write_png_gray(a.out, res.matte, 8);
  if (!a.composite.empty()) {
    const auto bg = read_png_rgb(a.composite);
    if (!image.same_extent(bg)) throw UsageError("--composite background must match the image size");
    write_png_rgb(a.out.parent_path() / (a.out.stem().string() + "_composite.png"), composite(image, bg, res.matte));
  }
  fmt::print("candidate {} (score {:.3f}) -> {}\n", res.selected.id, res.selected.score, a.out.string());
  return 0;
}

struct ServeArgs {
  fs::path checkpoint, guidance;
  std::string host = "127.0.0.1", policy = "os8";
  int port = 8080, target = 0, threads = 4, ttl = 900;
};

int run_serve(const ServeArgs& a) {
  const auto m = load_model(a.checkpoint);
  service::ServiceConfig cfg;
  cfg.inference = inference_config(m, a.target, a.policy);
  cfg.session_ttl = std::chrono::seconds(a.ttl);
  cfg.guidance_dir = a.guidance;
  service::MattingService svc(cfg, m.model);
  service::HttpServer server(svc, a.threads);

  // Wait for SIGINT/SIGTERM on a dedicated thread, then shut down cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  const int port = server.bind(a.host, a.port);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}, stopping", sig);
    server.stop();
  });
  spdlog::info("listening on http://{}:{} (target {})", a.host, port, cfg.inference.target);
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int run_inspect(const fs::path& path) {
  const auto ckpt = train::load_checkpoint(path);
  std::size_t params = 0, tensors = 0, adam = 0;
  for (const auto& e : ckpt.entries) {
    if (e.path.starts_with("@adam/")) {
      ++adam;
    } else if (!e.path.starts_with("@")) {
      ++tensors;
      params += e.f32.size();
    }
  }
  const json out{{"iteration", ckpt.iteration()},
                 {"parameter_tensors", tensors},
                 {"parameters", params},
                 {"optimizer_entries", adam},
                 {"entries", ckpt.entries.size()},
                 {"config", ckpt.config}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask-to-matte refinement: corpus, training, evaluation, matting and service"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  fs::path data_dir;
  app.add_option("--data-dir", data_dir, "Default corpus root")->envname("MAM_DATA_DIR");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write a synthetic blob corpus");
  s->add_option("--out", synth.out, "Output directory (default: MAM_DATA_DIR)");
  s->add_option("--count", synth.count, "Instances")->check(CLI::PositiveNumber);
  s->add_option("--test-count", synth.test_count, "Held-out instances")->check(CLI::NonNegativeNumber);
  s->add_option("--size", synth.size, "Image side in pixels")->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Random seed");

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "Train from a JSON config");
  t->add_option("--config", train_args.config, "Config file")->required()->check(CLI::ExistingFile);
  t->add_option("--total", train_args.total, "Override total iterations")->check(CLI::NonNegativeNumber);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  e->add_option("--dataset", eval.dataset, "Dataset directory (default: MAM_DATA_DIR)");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--prompt", eval.prompt, "box or point")->check(CLI::IsMember({"box", "point"}));
  e->add_option("--policy", eval.policy, "Merge base: mask or os8")->check(CLI::IsMember({"mask", "os8"}));
  e->add_option("--target", eval.target, "Inference resolution (default: training crop)")->check(CLI::PositiveNumber);
  e->add_option("--out", eval.out, "Report JSON path");

  MatteArgs matte;
  auto* m = app.add_subcommand("matte", "Matte one image from a box or point prompt");
  m->add_option("--image", matte.image, "Input PNG")->required()->check(CLI::ExistingFile);
  m->add_option("--checkpoint", matte.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  m->add_option("--box", matte.box, "x0,y0,x1,y1 in source pixels");
  m->add_option("--point", matte.point, "x,y in source pixels");
  m->add_option("--candidates", matte.candidates, "Imported guidance directory")->check(CLI::ExistingDirectory);
  m->add_option("--alpha", matte.alphas, "Ground-truth alpha PNGs (exact candidates)")->check(CLI::ExistingFile);
  m->add_option("--policy", matte.policy, "Merge base: mask or os8")->check(CLI::IsMember({"mask", "os8"}));
  m->add_option("--target", matte.target, "Inference resolution (default: training crop)")->check(CLI::PositiveNumber);
  m->add_option("--out", matte.out, "Output matte PNG")->required();
  m->add_option("--composite", matte.composite, "Background PNG; writes <out>_composite.png")->check(CLI::ExistingFile);

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "Start the HTTP service");
  v->add_option("--checkpoint", serve.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  v->add_option("--host", serve.host, "Bind address");
  v->add_option("--port", serve.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  v->add_option("--threads", serve.threads, "Worker threads")->check(CLI::PositiveNumber);
  v->add_option("--ttl", serve.ttl, "Session idle TTL in seconds")->check(CLI::PositiveNumber);
  v->add_option("--guidance", serve.guidance, "Imported guidance root")->check(CLI::ExistingDirectory);
  v->add_option("--policy", serve.policy, "Default merge base: mask or os8")->check(CLI::IsMember({"mask", "os8"}));
  v->add_option("--target", serve.target, "Inference resolution (default: training crop)")->check(CLI::PositiveNumber);

  fs::path inspect_path;
  auto* i = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary as JSON");
  i->add_option("checkpoint", inspect_path, "Checkpoint")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsageError;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*s) {
      if (synth.out.empty()) synth.out = data_dir;
      return run_synth(synth);
    }
    if (*t) {
      train_args.data_dir = data_dir;
      return run_train(train_args);
    }
    if (*e) {
      if (eval.dataset.empty()) eval.dataset = data_dir;
      return run_eval(eval);
    }
    if (*m) return run_matte(matte);
    if (*v) return run_serve(serve);
    if (*i) return run_inspect(inspect_path);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n" << app.help();
    return kUsageError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
