#ifndef CLOZER_HTTP_API_HPP_
#define CLOZER_HTTP_API_HPP_

#include <memory>
#include <string>

#include "clozer/service.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace clozer {

nlohmann::json to_json(const GradeResult& g);
nlohmann::json to_json(const Hint& h);
nlohmann::json to_json(const CurrentQuestion& c);
nlohmann::json to_json(const SessionSummary& s);
nlohmann::json to_json(const QuestionStats& s);

// JSON-over-HTTP front end for a QuizService:
//   GET  /healthz
//   GET  /questions?min_gap=&target=&limit=
//   POST /sessions                {n_questions, min_gap, hint_mode, seed}
//   GET  /sessions/{id}/current
//   POST /sessions/{id}/answer    {question_id, text}
//   GET  /sessions/{id}/summary
//   GET  /stats/questions
// Errors are {"error": {"code", "message"}}.
class HttpApi {
 public:
  explicit HttpApi(QuizService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Returns false if the address cannot be bound.
  bool bind(const std::string& host, int port);
  // Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);
  // Serves until stop(); call after a successful bind.
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  QuizService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace clozer

#endif  // CLOZER_HTTP_API_HPP_
