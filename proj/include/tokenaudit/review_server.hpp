#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "tokenaudit/review.hpp"

namespace httplib {
class Server;
}

namespace tokenaudit {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;
  std::filesystem::path default_export_path = "corrected.jsonl";
};

// HTTP front end for a ReviewService. Endpoints (all bodies JSON):
//   GET  /api/methods
//   GET  /api/sentences?sort=&method=&token_method=&offset=&limit=&filter=
//   GET  /api/sentences/{id}?token_method=
//   POST /api/sentences/{id}/review
//   GET  /api/stats
//   POST /api/export            {"path": optional}
// Errors are {"schema": ..., "error": {"status": int, "message": str}}.
class ReviewServer {
 public:
  ReviewServer(ReviewService& service, ServerOptions options);
  ~ReviewServer();

  // Returns the bound port. Throws Error when the port is unavailable.
  int bind();
  // Blocks until stop().
  void run();
  void stop();

 private:
  void register_routes();

  ReviewService& service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace tokenaudit
