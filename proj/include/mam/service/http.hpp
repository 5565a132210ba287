#pragma once

#include <memory>
#include <string>

#include "mam/service/service.hpp"

namespace mam::service {

/// HTTP/1.1 front end for a MattingService.
///
///   GET    /v1/health
///   POST   /v1/sessions                      PNG body, or multipart (image, alpha…, name)
///   GET    /v1/sessions/{id}
///   DELETE /v1/sessions/{id}
///   GET    /v1/sessions/{id}/candidates
///   POST   /v1/sessions/{id}/matte           PromptRequest JSON
///   GET    /v1/sessions/{id}/results/{k}/composite?bg=white|black|checker
///   GET    /v1/sessions/{id}/raw/results/{k}/matte|mask
///   GET    /v1/sessions/{id}/raw/candidates/{c}
///
/// Errors are JSON {"error": message, "field": name?} with 400, 404 or 413.
class HttpServer {
 public:
  explicit HttpServer(MattingService& service, int threads = 4);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port; throws
  /// IoError when binding fails.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mam::service
