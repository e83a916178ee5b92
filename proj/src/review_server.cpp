#include "tokenaudit/review_server.hpp"

#include <algorithm>
#include <charconv>

#include "httplib.h"
#include "tokenaudit/review_json.hpp"

namespace tokenaudit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>tokenaudit review</title></head>
<body><h1>tokenaudit review service</h1>
<p>No UI bundle configured. The JSON API is served under <code>/api/</code>:
<code>/api/methods</code>, <code>/api/sentences</code>, <code>/api/stats</code>.</p>
</body></html>
)";

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  ordered_json body;
  body["schema"] = kApiSchema;
  body["error"] = {{"status", status}, {"message", message}};
  send_json(res, body, status);
}

std::size_t parse_size(const std::string& value, const char* name) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError(std::string("query parameter '") + name + "' must be a non-negative integer");
  }
  return out;
}

SentenceId parse_id(const std::string& value) {
  SentenceId out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("bad sentence id '" + value + "'");
  }
  return out;
}

// Maps library errors onto HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what());
  } catch (const ConflictError& e) {
    send_error(res, 409, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

ReviewServer::ReviewServer(ReviewService& service, ServerOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  register_routes();
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error("cannot bind " + options_.host + ":" + std::to_string(options_.port) +
                " (port busy or not permitted)");
  }
  return port;
}

void ReviewServer::run() { server_->listen_after_bind(); }

void ReviewServer::stop() {
  if (server_) server_->stop();
}

void ReviewServer::register_routes() {
  auto& svc = service_;
  httplib::Server& srv = *server_;

  srv.Get("/api/methods", [&svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      ordered_json body;
      body["schema"] = kApiSchema;
      body["fingerprint"] = svc.fingerprint();
      body["classes"] = svc.dataset().label_space.names();
      ordered_json token_methods = ordered_json::array();
      for (TokenMethod t : kAllTokenMethods) token_methods.push_back(to_string(t));
      body["token_methods"] = std::move(token_methods);
      ordered_json methods = ordered_json::array();
      for (const auto& sel : svc.methods()) {
        ordered_json m;
        m["method"] = to_string(sel.method);
        m["token_method"] =
            sel.token_method ? ordered_json(to_string(*sel.token_method)) : ordered_json();
        m["label"] = sel.label();
        methods.push_back(std::move(m));
      }
      body["methods"] = std::move(methods);
      send_json(res, body);
    });
  });

  srv.Get("/api/sentences", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      ListQuery q;
      const auto available = svc.methods();
      if (req.has_param("method")) {
        q.selection.method = parse_sentence_method(req.get_param_value("method"));
        if (uses_token_score(q.selection.method)) {
          q.selection.token_method =
              parse_token_method(req.has_param("token_method")
                                     ? req.get_param_value("token_method")
                                     : std::string("self-confidence"));
        }
      } else {
        const MethodSelection preferred{SentenceMethod::kWorstToken, TokenMethod::kSelfConfidence};
        if (std::find(available.begin(), available.end(), preferred) != available.end()) {
          q.selection = preferred;
        } else if (!available.empty()) {
          q.selection = available.front();
        } else {
          q.selection = preferred;
        }
      }
      if (req.has_param("sort")) q.sort = parse_sort_key(req.get_param_value("sort"));
      if (req.has_param("filter")) q.filter = parse_review_filter(req.get_param_value("filter"));
      if (req.has_param("offset")) q.offset = parse_size(req.get_param_value("offset"), "offset");
      if (req.has_param("limit")) q.limit = parse_size(req.get_param_value("limit"), "limit");
      send_json(res, page_to_json(svc.list_sentences(q), q));
    });
  });

  srv.Get(R"(/api/sentences/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const SentenceId id = parse_id(req.matches[1]);
      const TokenMethod tm = req.has_param("token_method")
                                 ? parse_token_method(req.get_param_value("token_method"))
                                 : TokenMethod::kSelfConfidence;
      send_json(res, detail_to_json(svc.get_sentence(id, tm), svc.dataset().label_space));
    });
  });

  srv.Post(R"(/api/sentences/([^/]+)/review)",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             guarded(res, [&] {
               const SentenceId id = parse_id(req.matches[1]);
               const json body = json::parse(req.body);
               ReviewRecord r = review_from_json(body, id, svc.dataset().label_space);
               std::optional<std::string> fp;
               if (body.contains("fingerprint") && body.at("fingerprint").is_string()) {
                 fp = body.at("fingerprint").get<std::string>();
               }
               const ReviewStats stats = svc.submit_review(std::move(r), fp);
               ordered_json out;
               out["schema"] = kApiSchema;
               out["review"] = review_to_json(*svc.review_for(id));
               out["stats"] = stats_to_json(stats);
               send_json(res, out);
             });
           });

  srv.Get("/api/stats", [&svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      ordered_json out;
      out["schema"] = kApiSchema;
      out["stats"] = stats_to_json(svc.stats());
      send_json(res, out);
    });
  });

  srv.Post("/api/export", [this, &svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::filesystem::path path = options_.default_export_path;
      if (!req.body.empty()) {
        const json body = json::parse(req.body);
        if (body.contains("path") && body.at("path").is_string()) {
          path = body.at("path").get<std::string>();
        }
      }
      const Dataset corrected = svc.corrected_dataset();
      std::size_t changed = 0;
      for (std::size_t i = 0; i < corrected.sentences.size(); ++i) {
        if (corrected.sentences[i].given_labels != svc.dataset().sentences[i].given_labels) {
          ++changed;
        }
      }
      svc.export_corrected(path);
      ordered_json out;
      out["schema"] = kApiSchema;
      out["path"] = path.string();
      out["changed_sentences"] = changed;
      send_json(res, out);
    });
  });

  if (options_.ui_dir) {
    if (!srv.set_mount_point("/", options_.ui_dir->string())) {
      throw Error("UI directory '" + options_.ui_dir->string() + "' does not exist");
    }
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
    });
  }

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "no such endpoint");
  });
}

}  // namespace tokenaudit
