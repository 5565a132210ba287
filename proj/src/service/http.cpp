#include "mam/service/http.hpp"

#include <httplib.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mam/errors.hpp"

namespace mam::service {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_png(httplib::Response& res, const Bytes& png) {
  res.status = 200;
  res.set_content(std::string(png.begin(), png.end()), "image/png");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
  json body{{"error", message}};
  if (!field.empty()) body["field"] = field;
  send_json(res, status, body);
}

Bytes as_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

int result_index(const std::string& text) {
  try {
    std::size_t used = 0;
    const int k = std::stoi(text, &used);
    if (used == text.size()) return k;
  } catch (const std::exception&) {
  }
  throw NotFoundError(fmt::format("no result '{}'", text));
}

// Runs a handler, mapping exceptions to status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const RequestError& e) {
      send_error(res, 400, e.what(), e.field());
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const PayloadTooLargeError& e) {
      send_error(res, 413, e.what());
    } catch (const SelectionError& e) {
      send_error(res, 400, e.what(), "prompt");
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  MattingService& service;
  httplib::Server server;
};

HttpServer::HttpServer(MattingService& service, int threads) : impl_(new Impl{service, {}}) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  const int workers = std::max(1, threads);
  srv.new_task_queue = [workers] { return new httplib::ThreadPool(std::size_t(workers)); };
  srv.set_payload_max_length(svc.config().max_upload_bytes + (1u << 20));

  srv.Get("/v1/health", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.health());
          }));

  srv.Post("/v1/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             Bytes image;
             std::vector<Bytes> alphas;
             std::string name = req.has_param("name") ? req.get_param_value("name") : "";
             if (req.is_multipart_form_data()) {
               if (!req.has_file("image")) throw RequestError("image", "multipart upload needs an 'image' part");
               image = as_bytes(req.get_file_value("image").content);
               for (const auto& part : req.get_file_values("alpha")) alphas.push_back(as_bytes(part.content));
               if (req.has_file("name")) name = req.get_file_value("name").content;
             } else {
               image = as_bytes(req.body);
             }
             if (image.empty()) throw RequestError("image", "empty upload");
             const auto s = svc.create_session(image, alphas, name);
             send_json(res, 201, {{"id", s->id},
                                  {"width", s->image.width},
                                  {"height", s->image.height},
                                  {"n_candidates", s->candidates.size()},
                                  {"candidate_source", s->candidate_source}});
           }));

  srv.Get(R"(/v1/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto s = svc.session(req.matches[1]);
            std::lock_guard lock(s->mutex);
            send_json(res, 200, svc.session_json(*s));
          }));

  srv.Delete(R"(/v1/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               if (!svc.remove_session(req.matches[1])) throw NotFoundError(fmt::format("unknown session '{}'", req.matches[1].str()));
               res.status = 204;
             }));

  srv.Get(R"(/v1/sessions/([^/]+)/candidates)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto s = svc.session(req.matches[1]);
            std::lock_guard lock(s->mutex);
            send_json(res, 200, svc.candidates_json(*s));
          }));

  srv.Post(R"(/v1/sessions/([^/]+)/matte)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto body = json::parse(req.body, nullptr, false);
             if (body.is_discarded()) throw RequestError("", "request body is not valid JSON");
             send_json(res, 200, svc.matte(req.matches[1], body));
           }));

  srv.Get(R"(/v1/sessions/([^/]+)/results/([^/]+)/composite)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto bg = req.has_param("bg") ? req.get_param_value("bg") : "white";
            send_png(res, svc.composite_png(req.matches[1], result_index(req.matches[2]), bg));
          }));

  srv.Get(R"(/v1/sessions/([^/]+)/raw/results/([^/]+)/(matte|mask))",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_png(res, svc.result_png(req.matches[1], result_index(req.matches[2]), req.matches[3]));
          }));

  srv.Get(R"(/v1/sessions/([^/]+)/raw/candidates/([^/]+))",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_png(res, svc.candidate_png(req.matches[1], result_index(req.matches[2])));
          }));

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413) send_error(res, 413, "payload too large");
    else if (res.status == 404) send_error(res, 404, fmt::format("no route for {} {}", req.method, req.path));
    else send_error(res, res.status, "request failed");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw IoError(fmt::format("cannot bind {}", host));
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw IoError(fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace mam::service
