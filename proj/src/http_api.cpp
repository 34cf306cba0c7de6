#include "clozer/http_api.hpp"

#include <string>

#include "httplib.h"

namespace clozer {

using nlohmann::json;

json to_json(const GradeResult& g) {
  return {{"exact", g.exact},
          {"stem", g.stem},
          {"normalized_answer", g.normalized_answer},
          {"normalized_truth", g.normalized_truth},
          {"used_hint", g.used_hint},
          {"attempt_number", g.attempt_number}};
}

json to_json(const Hint& h) {
  return {{"kind", "first_letter"}, {"value", std::string(1, h.value)}};
}

json to_json(const CurrentQuestion& c) {
  json j = {{"session_id", c.session_id},
            {"finished", c.finished},
            {"index", c.index},
            {"total", c.total}};
  if (!c.finished) {
    j["question"] = {{"question_id", c.question_id}, {"masked_text", c.masked_text}};
    j["attempt_number"] = c.attempt_number;
    j["hint"] = c.hint ? to_json(*c.hint) : json(nullptr);
  }
  return j;
}

json to_json(const SessionSummary& s) {
  return {{"n_questions", s.n_questions},
          {"exact_ratio", s.exact_ratio},
          {"stem_ratio", s.stem_ratio},
          {"with_hint_exact_ratio", s.with_hint_exact_ratio},
          {"with_hint_stem_ratio", s.with_hint_stem_ratio}};
}

json to_json(const QuestionStats& s) {
  return {{"question_id", s.question_id}, {"phi", s.phi},
          {"n_answers", s.n_answers},     {"exact_ratio", s.exact_ratio},
          {"stem_ratio", s.stem_ratio},   {"no_answers", s.no_answers}};
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw ValidationError("request body must be a JSON object");
  }
  return body;
}

// Runs a handler and maps library errors onto HTTP statuses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const InsufficientQuestionsError& e) {
      send_json(res, 409,
                {{"error", {{"code", "insufficient_questions"},
                            {"message", e.what()},
                            {"available", e.available()}}}});
    } catch (const NotFoundError& e) {
      send_error(res, 404, "not_found", e.what());
    } catch (const StateError& e) {
      send_error(res, 409, "conflict", e.what());
    } catch (const ValidationError& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ValidationError(std::string("bad ") + key + ": " + v);
  return d;
}

}  // namespace

HttpApi::HttpApi(QuizService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  install_routes();
}

HttpApi::~HttpApi() { stop(); }

void HttpApi::install_routes() {
  httplib::Server& srv = *server_;

  srv.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  }));

  srv.Get("/questions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    SelectFilter filter;
    if (req.has_param("min_gap")) filter.min_gap = query_double(req, "min_gap", 0.0);
    if (req.has_param("target")) filter.target_word = req.get_param_value("target");
    if (req.has_param("limit")) {
      const double limit = query_double(req, "limit", 0.0);
      if (limit < 0 || limit != static_cast<double>(static_cast<std::size_t>(limit))) {
        throw ValidationError("limit must be a non-negative integer");
      }
      filter.limit = static_cast<std::size_t>(limit);
    }
    json list = json::array();
    for (const Question& q : select(service_.bank(), filter)) {
      list.push_back(json::parse(question_to_json(q).dump()));
    }
    send_json(res, 200, {{"questions", std::move(list)}});
  }));

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    SessionParams params;
    params.n_questions = body.value("n_questions", params.n_questions);
    params.min_gap = body.value("min_gap", params.min_gap);
    params.hint_mode = body.value("hint_mode", params.hint_mode);
    params.seed = body.value("seed", params.seed);
    const QuizSession s = service_.create_session(params);
    json out = session_record_to_json(s);
    out["current"] = to_json(current_question(s, service_.bank()));
    send_json(res, 201, out);
  }));

  srv.Get(R"(/sessions/([^/]+)/current)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(service_.current(req.matches[1])));
          }));

  srv.Post(R"(/sessions/([^/]+)/answer)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (!body.contains("question_id") || !body["question_id"].is_string() ||
                 !body.contains("text") || !body["text"].is_string()) {
               throw ValidationError("body needs string fields question_id and text");
             }
             const SubmitResult r = service_.submit_answer(
                 req.matches[1], body["question_id"].get<std::string>(),
                 body["text"].get<std::string>());
             send_json(res, 200,
                       {{"grade", to_json(r.grade)},
                        {"hint", r.hint ? to_json(*r.hint) : json(nullptr)},
                        {"finalized", r.finalized},
                        {"session_finished", r.session_finished}});
           }));

  srv.Get(R"(/sessions/([^/]+)/summary)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(service_.session_summary(req.matches[1])));
          }));

  srv.Get("/stats/questions", guarded([this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const QuestionStats& s : service_.question_stats()) list.push_back(to_json(s));
    send_json(res, 200, {{"questions", std::move(list)}});
  }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                 "HTTP " + std::to_string(res.status));
    }
  });
}

bool HttpApi::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

int HttpApi::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpApi::serve() { return server_->listen_after_bind(); }

void HttpApi::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpApi::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace clozer
