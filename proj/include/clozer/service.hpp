#ifndef CLOZER_SERVICE_HPP_
#define CLOZER_SERVICE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "clozer/analysis.hpp"
#include "clozer/answer_log.hpp"
#include "clozer/error.hpp"
#include "clozer/grading.hpp"
#include "clozer/question_bank.hpp"

namespace clozer {

// Not enough bank questions clear the requested threshold.
class InsufficientQuestionsError : public StateError {
 public:
  InsufficientQuestionsError(std::size_t requested, std::size_t available);
  std::size_t available() const { return available_; }

 private:
  std::size_t available_;
};

struct SessionParams {
  std::size_t n_questions = 20;
  double min_gap = 0.80;
  bool hint_mode = false;
  std::uint64_t seed = 0;

  bool operator==(const SessionParams&) const = default;
};

struct QuestionState {
  int attempts_used = 0;
  bool hint_issued = false;
  std::optional<GradeResult> first_grade;
  std::optional<GradeResult> final_grade;

  bool finalized() const { return final_grade.has_value(); }
  bool operator==(const QuestionState&) const = default;
};

// A quiz in progress. cursor only moves past a question once it is final:
// answered exactly, or out of attempts (one without hints, two with).
struct QuizSession {
  std::string session_id;
  std::vector<std::string> question_ids;
  std::size_t cursor = 0;
  bool hint_mode = false;
  std::vector<QuestionState> states;
  SessionParams params;
  std::string created_at;

  bool finished() const { return cursor >= question_ids.size(); }
  bool operator==(const QuizSession&) const = default;
};

struct SubmitResult {
  GradeResult grade;
  std::optional<Hint> hint;
  bool finalized = false;
  bool session_finished = false;
};

struct CurrentQuestion {
  std::string session_id;
  bool finished = false;
  std::size_t index = 0;
  std::size_t total = 0;
  std::string question_id;
  std::string masked_text;
  int attempt_number = 1;
  std::optional<Hint> hint;
};

struct SessionSummary {
  std::size_t n_questions = 0;
  // First attempts only.
  double exact_ratio = 0.0;
  double stem_ratio = 0.0;
  // Best of both attempts.
  double with_hint_exact_ratio = 0.0;
  double with_hint_stem_ratio = 0.0;
};

// Picks `params.n_questions` ids among bank questions with phi >= min_gap by
// a seeded shuffle of the qualifying ids (sorted by id first).
std::vector<std::string> draw_questions(const QuestionBank& bank, const SessionParams& params);

QuizSession new_session(std::string session_id, const QuestionBank& bank,
                        const SessionParams& params, std::string created_at);

// Grades one submission against the session's current question and advances
// the state machine. Throws StateError for an out-of-order or finished
// question and NotFoundError for an id missing from the bank.
SubmitResult apply_submission(QuizSession& session, const QuestionBank& bank,
                              const std::string& question_id, std::string_view text);

CurrentQuestion current_question(const QuizSession& session, const QuestionBank& bank);

// Throws StateError listing the unfinished question ids.
SessionSummary summarize(const QuizSession& session);
// Pools every question of every session (each must be finished).
SessionSummary summarize(std::span<const QuizSession> sessions);

// Rebuilds a session from its creation record and its answers (in log
// order). Throws ValidationError if a logged grade disagrees with the
// replayed one.
QuizSession replay_session(QuizSession created, const QuestionBank& bank,
                           std::span<const AnswerLogRecord> answers);

nlohmann::json session_record_to_json(const QuizSession& session);
QuizSession session_from_record(const nlohmann::json& j);

std::string iso8601_now();

// Session registry with append-only persistence. With a data directory,
// sessions.jsonl holds one creation record per session and answers.jsonl the
// answer log; both are replayed on construction. Sessions are independent;
// calls on one session are serialized.
class QuizService {
 public:
  using Clock = std::function<std::string()>;

  explicit QuizService(QuestionBank bank,
                       std::optional<std::filesystem::path> data_dir = std::nullopt,
                       Clock clock = iso8601_now);

  QuizSession create_session(const SessionParams& params);
  SubmitResult submit_answer(const std::string& session_id, const std::string& question_id,
                             std::string_view text);
  CurrentQuestion current(const std::string& session_id) const;
  SessionSummary session_summary(const std::string& session_id) const;
  QuizSession session(const std::string& session_id) const;

  std::vector<AnswerLogRecord> answer_log() const;
  std::vector<QuestionStats> question_stats() const;
  const QuestionBank& bank() const { return bank_; }

  std::filesystem::path sessions_path() const;
  std::filesystem::path answers_path() const;

 private:
  struct Entry {
    mutable std::mutex mu;
    QuizSession session;
  };

  Entry& entry(const std::string& session_id) const;
  void replay_from_disk();

  QuestionBank bank_;
  std::optional<std::filesystem::path> data_dir_;
  Clock clock_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  std::size_t next_session_ = 1;

  mutable std::mutex log_mu_;
  std::vector<AnswerLogRecord> log_;
};

}  // namespace clozer

#endif  // CLOZER_SERVICE_HPP_
