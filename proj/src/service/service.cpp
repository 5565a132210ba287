#include "mam/service/service.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <spdlog/spdlog.h>

#include "mam/core/compositing.hpp"
#include "mam/core/morphology.hpp"
#include "mam/errors.hpp"
#include "mam/guidance/encoder.hpp"
#include "mam/guidance/import.hpp"
#include "mam/train/config.hpp"

namespace mam::service {

using nlohmann::json;

namespace {

double number_field(const json& obj, const std::string& parent, const char* key) {
  const auto field = parent + "." + key;
  if (!obj.contains(key)) throw RequestError(field, fmt::format("missing field '{}'", field));
  const auto& v = obj.at(key);
  if (!v.is_number()) throw RequestError(field, fmt::format("field '{}' must be a number", field));
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw RequestError(field, fmt::format("field '{}' must be finite", field));
  return d;
}

const char* policy_name(infer::MergeBase b) { return b == infer::MergeBase::FromMask ? "mask" : "os8"; }

std::string random_id() {
  unsigned char buf[12];
  if (RAND_bytes(buf, sizeof buf) != 1) throw std::runtime_error("RAND_bytes failed");
  std::string id;
  for (unsigned char c : buf) id += fmt::format("{:02x}", c);
  return id;
}

json box_json(const std::optional<Box>& b) {
  if (!b) return nullptr;
  return json::array({b->x0, b->y0, b->x1, b->y1});
}

}  // namespace

PromptRequest parse_prompt_request(const json& body, int width, int height) {
  if (!body.is_object()) throw RequestError("", "request body must be a JSON object");
  if (!body.contains("kind") || !body["kind"].is_string()) throw RequestError("kind", "missing field 'kind'");
  PromptRequest r;
  const auto kind = body["kind"].get<std::string>();
  if (kind == "box") {
    if (!body.contains("box") || !body["box"].is_object()) throw RequestError("box", "missing object 'box'");
    const auto& b = body["box"];
    const int x0 = int(std::lround(number_field(b, "box", "x0")));
    const int y0 = int(std::lround(number_field(b, "box", "y0")));
    const int x1 = int(std::lround(number_field(b, "box", "x1")));
    const int y1 = int(std::lround(number_field(b, "box", "y1")));
    if (x0 < 0 || x0 >= width) throw RequestError("box.x0", fmt::format("box.x0 = {} outside [0, {})", x0, width));
    if (y0 < 0 || y0 >= height) throw RequestError("box.y0", fmt::format("box.y0 = {} outside [0, {})", y0, height));
    if (x1 <= x0 || x1 > width) throw RequestError("box.x1", fmt::format("box.x1 = {} outside ({}, {}]", x1, x0, width));
    if (y1 <= y0 || y1 > height) throw RequestError("box.y1", fmt::format("box.y1 = {} outside ({}, {}]", y1, y0, height));
    r.prompt = guidance::Prompt::from_box(Box{x0, y0, x1, y1});
  } else if (kind == "point") {
    if (!body.contains("point") || !body["point"].is_object()) throw RequestError("point", "missing object 'point'");
    const auto& p = body["point"];
    const double x = number_field(p, "point", "x"), y = number_field(p, "point", "y");
    if (x < 0 || x >= width) throw RequestError("point.x", fmt::format("point.x = {} outside [0, {})", x, width));
    if (y < 0 || y >= height) throw RequestError("point.y", fmt::format("point.y = {} outside [0, {})", y, height));
    r.prompt = guidance::Prompt::from_point(x, y);
  } else {
    throw RequestError("kind", fmt::format("kind must be 'box' or 'point', got '{}'", kind));
  }
  if (body.contains("policy") && !body["policy"].is_null()) {
    const auto& p = body["policy"];
    if (p == "mask") r.policy = infer::MergeBase::FromMask;
    else if (p == "os8") r.policy = infer::MergeBase::FromOs8;
    else throw RequestError("policy", "policy must be 'mask' or 'os8'");
  }
  return r;
}

json to_json(const PromptRequest& r) {
  json j;
  if (r.prompt.kind == guidance::PromptKind::Box) {
    const auto& b = r.prompt.box;
    j = {{"kind", "box"}, {"box", {{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}}}};
  } else {
    j = {{"kind", "point"}, {"point", {{"x", r.prompt.point.x}, {"y", r.prompt.point.y}}}};
  }
  if (r.policy) j["policy"] = policy_name(*r.policy);
  return j;
}

std::string base64_encode(const Bytes& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), int(bytes.size()));
  out.resize(std::size_t(n));
  return out;
}

Bytes base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw RequestError("", "base64 length must be a multiple of 4");
  Bytes out(text.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), int(text.size()));
  if (n < 0) throw RequestError("", "malformed base64");
  std::size_t pad = 0;
  for (auto it = text.rbegin(); it != text.rend() && *it == '=' && pad < 2; ++it) ++pad;
  out.resize(std::size_t(n) - pad);
  return out;
}

Backdrop parse_backdrop(const std::string& name) {
  if (name == "white" || name.empty()) return Backdrop::White;
  if (name == "black") return Backdrop::Black;
  if (name == "checker") return Backdrop::Checker;
  throw RequestError("bg", fmt::format("bg must be white, black or checker, got '{}'", name));
}

ImageRGB composite_over(const ImageRGB& image, const AlphaMatte& matte, Backdrop backdrop) {
  ImageRGB bg(image.width, image.height, backdrop == Backdrop::White ? 1.0 : 0.0);
  if (backdrop == Backdrop::Checker) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) bg.at(c, x, y) = ((x / 8 + y / 8) % 2) ? 0.6 : 0.85;
  }
  return composite(image, bg, matte);
}

MattingService::MattingService(ServiceConfig cfg, std::shared_ptr<const m2m::MattingModel<float>> model)
    : cfg_(std::move(cfg)), model_(model), refiner_(std::move(model)) {
  cfg_.inference.validate();
}

std::shared_ptr<Session> MattingService::create_session(const Bytes& png, const std::vector<Bytes>& gt_alpha_pngs,
                                                        const std::string& name) {
  if (png.size() > cfg_.max_upload_bytes) {
    throw PayloadTooLargeError(fmt::format("upload of {} bytes exceeds {}", png.size(), cfg_.max_upload_bytes));
  }
  ImageRGB image;
  try {
    image = decode_png_rgb(png);
  } catch (const std::exception& e) {
    throw RequestError("image", fmt::format("image is not a readable PNG: {}", e.what()));
  }
  if (long(image.width) * image.height > cfg_.max_pixels) {
    throw PayloadTooLargeError(fmt::format("image {}x{} exceeds {} pixels", image.width, image.height, cfg_.max_pixels));
  }

  if (name.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.-") != std::string::npos ||
      name.starts_with(".")) {
    throw RequestError("name", "name may only contain letters, digits, '_', '-' and '.', and may not start with '.'");
  }
  auto s = std::make_shared<Session>();
  s->name = name;
  s->image = std::move(image);
  const auto pre = infer::preprocess(s->image, cfg_.inference.target);
  s->transform = pre.transform;

  const auto imported = cfg_.guidance_dir.empty() || name.empty() ? std::filesystem::path{} : cfg_.guidance_dir / name;
  if (!imported.empty() && std::filesystem::is_directory(imported)) {
    auto g = guidance::load_guidance(imported);
    for (const auto& c : g.candidates)
      if (!s->image.same_extent(c.mask)) throw RequestError("name", fmt::format("guidance for '{}' does not match the image", name));
    s->candidates = std::move(g.candidates);
    s->candidate_source = "imported";
    const int side = cfg_.inference.target / 16;
    if (g.features && g.features->height() == side && g.features->width() == side) s->features = std::move(g.features);
  } else if (!gt_alpha_pngs.empty()) {
    std::vector<AlphaMatte> gts;
    for (std::size_t k = 0; k < gt_alpha_pngs.size(); ++k) {
      AlphaMatte a;
      try {
        a = decode_png_gray(gt_alpha_pngs[k]);
      } catch (const std::exception& e) {
        throw RequestError(fmt::format("alpha[{}]", k), fmt::format("alpha {} is not a readable PNG: {}", k, e.what()));
      }
      if (!s->image.same_extent(a)) throw RequestError(fmt::format("alpha[{}]", k), "alpha extents differ from the image");
      gts.push_back(std::move(a));
    }
    guidance::OracleConfig exact;
    exact.r_max = 0;
    exact.jitter = 0.0;
    s->candidates = guidance::oracle_candidates(gts, exact);
    s->candidate_source = "oracle";
  } else {
    s->candidates = guidance::propose_candidates(s->image);
    s->candidate_source = "proposer";
  }
  if (!s->features) s->features = guidance::encode_features(pre.image, model_->encoder());

  s->created = s->last_used = SteadyClock::now();
  std::lock_guard lock(mutex_);
  expire_idle_locked(s->created);
  if (sessions_.size() >= cfg_.max_sessions) {
    // Evict the least recently used session.
    auto oldest = std::min_element(sessions_.begin(), sessions_.end(), [](const auto& a, const auto& b) {
      return a.second->last_used < b.second->last_used;
    });
    spdlog::info("session limit reached, evicting {}", oldest->first);
    sessions_.erase(oldest);
  }
  do s->id = random_id();
  while (sessions_.count(s->id));
  sessions_[s->id] = s;
  spdlog::info("session {} created: {}x{}, {} {} candidates", s->id, s->image.width, s->image.height,
               s->candidates.size(), s->candidate_source);
  return s;
}

std::shared_ptr<Session> MattingService::session(const std::string& id) {
  std::lock_guard lock(mutex_);
  const auto now = SteadyClock::now();
  const auto it = sessions_.find(id);
  if (it == sessions_.end() || now - it->second->last_used > cfg_.session_ttl) {
    if (it != sessions_.end()) sessions_.erase(it);
    throw NotFoundError(fmt::format("unknown session '{}'", id));
  }
  it->second->last_used = now;
  return it->second;
}

bool MattingService::remove_session(const std::string& id) {
  std::lock_guard lock(mutex_);
  return sessions_.erase(id) > 0;
}

std::size_t MattingService::expire_idle(SteadyClock::time_point now) {
  std::lock_guard lock(mutex_);
  return expire_idle_locked(now);
}

std::size_t MattingService::expire_idle_locked(SteadyClock::time_point now) {
  std::size_t n = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_used > cfg_.session_ttl) {
      it = sessions_.erase(it);
      ++n;
    } else {
      ++it;
    }
  }
  return n;
}

std::size_t MattingService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

json MattingService::session_json(const Session& s) const {
  json history = json::array();
  for (const auto& r : s.history) {
    history.push_back({{"result", r.index},
                       {"prompt", to_json(r.request)},
                       {"selected", r.selected.id},
                       {"policy", policy_name(r.policy)},
                       {"timing_ms", r.timing_ms}});
  }
  return {{"id", s.id},
          {"width", s.image.width},
          {"height", s.image.height},
          {"n_candidates", s.candidates.size()},
          {"candidate_source", s.candidate_source},
          {"history", history}};
}

json MattingService::candidates_json(const Session& s) const {
  json list = json::array();
  for (const auto& c : s.candidates) {
    list.push_back({{"id", c.id},
                    {"score", c.score},
                    {"area", mask_area(c.mask)},
                    {"bbox", box_json(bounding_box(c.mask))},
                    {"mask_png", base64_encode(encode_png_mask(c.mask))}});
  }
  return {{"source", s.candidate_source}, {"candidates", list}};
}

json MattingService::matte(const std::string& id, const json& body) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  const auto request = parse_prompt_request(body, s->image.width, s->image.height);
  auto cfg = cfg_.inference;
  if (request.policy) cfg.base = *request.policy;

  const auto t0 = SteadyClock::now();
  auto res = infer::matte_from_prompt(s->image, request.prompt, s->candidates, refiner_, cfg,
                                      s->features ? &*s->features : nullptr);
  SessionResult r;
  r.index = int(s->history.size());
  r.request = request;
  r.policy = cfg.base;
  r.matte_png = encode_png_gray(res.matte, 8);
  r.mask_png = encode_png_mask(res.selected.mask);
  r.selected = std::move(res.selected);
  r.matte = std::move(res.matte);
  r.timing_ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
  s->history.push_back(std::move(r));
  const auto& out = s->history.back();

  const auto base = fmt::format("/v1/sessions/{}", s->id);
  return {{"result", out.index},
          {"selected", {{"id", out.selected.id}, {"score", out.selected.score}, {"area", mask_area(out.selected.mask)}}},
          {"policy", policy_name(out.policy)},
          {"matte_png", base64_encode(out.matte_png)},
          {"mask_png", base64_encode(out.mask_png)},
          {"timing_ms", out.timing_ms},
          {"links",
           {{"composite", fmt::format("{}/results/{}/composite", base, out.index)},
            {"matte", fmt::format("{}/raw/results/{}/matte", base, out.index)},
            {"mask", fmt::format("{}/raw/results/{}/mask", base, out.index)}}}};
}

const SessionResult& MattingService::result_of(Session& s, int result) const {
  if (result < 0 || result >= int(s.history.size())) {
    throw NotFoundError(fmt::format("session {} has no result {}", s.id, result));
  }
  return s.history[std::size_t(result)];
}

Bytes MattingService::composite_png(const std::string& id, int result, const std::string& backdrop) {
  const auto bg = parse_backdrop(backdrop);
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  return encode_png_rgb(composite_over(s->image, result_of(*s, result).matte, bg));
}

Bytes MattingService::result_png(const std::string& id, int result, const std::string& what) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  const auto& r = result_of(*s, result);
  if (what == "matte") return r.matte_png;
  if (what == "mask") return r.mask_png;
  throw NotFoundError(fmt::format("no such result image '{}'", what));
}

Bytes MattingService::candidate_png(const std::string& id, int candidate) {
  auto s = session(id);
  std::lock_guard lock(s->mutex);
  for (const auto& c : s->candidates)
    if (c.id == candidate) return encode_png_mask(c.mask);
  throw NotFoundError(fmt::format("session {} has no candidate {}", id, candidate));
}

json MattingService::health() const {
  const auto policy = cfg_.inference.policy();
  return {{"status", "ok"},
          {"sessions", session_count()},
          {"target", cfg_.inference.target},
          {"policy", policy_name(policy.base)},
          {"r4", policy.r4},
          {"r1", policy.r1},
          {"session_ttl_s", cfg_.session_ttl.count()},
          {"model", train::to_json(model_->config())}};
}

}  // namespace mam::service
