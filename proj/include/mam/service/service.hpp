#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mam/core/png_io.hpp"
#include "mam/infer/refine.hpp"

namespace mam::service {

using SteadyClock = std::chrono::steady_clock;

// Request-level failures, mapped to HTTP statuses by the server.
class RequestError : public std::runtime_error {  // 400
 public:
  RequestError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class NotFoundError : public std::runtime_error {  // 404
 public:
  using std::runtime_error::runtime_error;
};

class PayloadTooLargeError : public std::runtime_error {  // 413
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceConfig {
  infer::InferenceConfig inference;
  std::chrono::seconds session_ttl{900};
  std::size_t max_sessions = 64;
  std::size_t max_upload_bytes = 32u << 20;
  long max_pixels = 4096L * 4096L;
  // Imported guidance exports, looked up as <guidance_dir>/<name>/ when the
  // upload names its image.
  std::filesystem::path guidance_dir;
};

/// Box corners or a point, in source pixels.
struct PromptRequest {
  guidance::Prompt prompt;
  std::optional<infer::MergeBase> policy;
};

/// {"kind":"box","box":{"x0":..,"y0":..,"x1":..,"y1":..}} or
/// {"kind":"point","point":{"x":..,"y":..}}, optional "policy":"mask"|"os8".
/// Box corners are rounded to whole pixels and must satisfy
/// 0 <= x0 < x1 <= width (same for y); a point must lie in [0,w)×[0,h).
/// RequestError names the offending field.
PromptRequest parse_prompt_request(const nlohmann::json& body, int width, int height);
nlohmann::json to_json(const PromptRequest& r);

std::string base64_encode(const Bytes& bytes);
Bytes base64_decode(const std::string& text);

enum class Backdrop { White, Black, Checker };
Backdrop parse_backdrop(const std::string& name);
/// The source image over a plain or checkerboard backdrop.
ImageRGB composite_over(const ImageRGB& image, const AlphaMatte& matte, Backdrop backdrop);

struct SessionResult {
  int index = 0;
  PromptRequest request;
  guidance::MaskCandidate selected;
  infer::MergeBase policy = infer::MergeBase::FromOs8;
  Bytes matte_png;  // 8-bit gray
  Bytes mask_png;
  AlphaMatte matte;
  double timing_ms = 0.0;
};

struct Session {
  std::string id;
  std::string name;
  ImageRGB image;
  infer::Transform transform;
  std::vector<guidance::MaskCandidate> candidates;
  std::string candidate_source;  // imported | oracle | proposer
  std::optional<guidance::FeatureMap> features;
  SteadyClock::time_point created;
  SteadyClock::time_point last_used;
  std::vector<SessionResult> history;  // append-only
  std::mutex mutex;  // serializes prompts on this session
};

/// Everything behind the HTTP routes, callable directly.
class MattingService {
 public:
  MattingService(ServiceConfig cfg, std::shared_ptr<const m2m::MattingModel<float>> model);

  /// Decodes the PNG and computes candidates and features once. With ground
  /// truth alphas (demo mode) the candidates are the exact oracle masks.
  std::shared_ptr<Session> create_session(const Bytes& png, const std::vector<Bytes>& gt_alpha_pngs = {},
                                          const std::string& name = {});
  /// NotFoundError for unknown or expired ids.
  std::shared_ptr<Session> session(const std::string& id);
  bool remove_session(const std::string& id);

  nlohmann::json session_json(const Session& s) const;
  nlohmann::json candidates_json(const Session& s) const;
  /// Runs the prompt and appends to the session history.
  nlohmann::json matte(const std::string& id, const nlohmann::json& body);
  Bytes composite_png(const std::string& id, int result, const std::string& backdrop);
  Bytes result_png(const std::string& id, int result, const std::string& what);  // matte | mask
  Bytes candidate_png(const std::string& id, int candidate);
  nlohmann::json health() const;

  /// Drops sessions idle for longer than the TTL at `now`; returns how many.
  std::size_t expire_idle(SteadyClock::time_point now);
  [[nodiscard]] std::size_t session_count() const;
  [[nodiscard]] const ServiceConfig& config() const { return cfg_; }

 private:
  const SessionResult& result_of(Session& s, int result) const;
  std::size_t expire_idle_locked(SteadyClock::time_point now);

  ServiceConfig cfg_;
  std::shared_ptr<const m2m::MattingModel<float>> model_;
  infer::NetworkRefiner refiner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace mam::service
