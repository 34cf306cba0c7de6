#include "clozer/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "clozer/seeded.hpp"

namespace clozer {

using nlohmann::json;

InsufficientQuestionsError::InsufficientQuestionsError(std::size_t requested,
                                                       std::size_t available)
    : StateError("requested " + std::to_string(requested) + " questions, " +
                 std::to_string(available) + " available"),
      available_(available) {}

std::string iso8601_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> draw_questions(const QuestionBank& bank, const SessionParams& params) {
  if (params.n_questions == 0) throw ValidationError("n_questions must be at least 1");
  std::vector<std::string> qualifying;
  for (const Question& q : bank.questions()) {
    if (q.phi >= params.min_gap) qualifying.push_back(q.question_id);
  }
  if (qualifying.size() < params.n_questions) {
    throw InsufficientQuestionsError(params.n_questions, qualifying.size());
  }
  std::sort(qualifying.begin(), qualifying.end());
  seeded_shuffle(qualifying, params.seed);
  qualifying.resize(params.n_questions);
  return qualifying;
}

QuizSession new_session(std::string session_id, const QuestionBank& bank,
                        const SessionParams& params, std::string created_at) {
  QuizSession s;
  s.session_id = std::move(session_id);
  s.question_ids = draw_questions(bank, params);
  s.hint_mode = params.hint_mode;
  s.states.resize(s.question_ids.size());
  s.params = params;
  s.created_at = std::move(created_at);
  return s;
}

SubmitResult apply_submission(QuizSession& session, const QuestionBank& bank,
                              const std::string& question_id, std::string_view text) {
  if (session.finished()) {
    throw StateError("session " + session.session_id + " is finished");
  }
  const std::string& current_id = session.question_ids[session.cursor];
  if (question_id != current_id) {
    const auto it = std::find(session.question_ids.begin(), session.question_ids.end(), question_id);
    if (it != session.question_ids.end() &&
        session.states[static_cast<std::size_t>(it - session.question_ids.begin())].finalized()) {
      throw StateError("question " + question_id + " is already finalized");
    }
    throw StateError("question " + question_id + " is not the current question (" +
                     current_id + ")");
  }
  const Question* q = bank.find(question_id);
  if (q == nullptr) throw NotFoundError("question " + question_id + " is not in the bank");

  QuestionState& state = session.states[session.cursor];
  const int attempt = state.attempts_used + 1;
  SubmitResult result;
  result.grade = grade(text, q->target_word, attempt, state.hint_issued);
  ++state.attempts_used;
  if (attempt == 1) state.first_grade = result.grade;

  if (result.grade.exact) {
    result.finalized = true;
  } else if (attempt == 1 && session.hint_mode) {
    result.hint = make_hint(q->target_word);
    state.hint_issued = true;
  } else {
    result.finalized = true;
  }
  if (result.finalized) {
    state.final_grade = result.grade;
    ++session.cursor;
  }
  result.session_finished = session.finished();
  return result;
}

CurrentQuestion current_question(const QuizSession& session, const QuestionBank& bank) {
  CurrentQuestion c;
  c.session_id = session.session_id;
  c.total = session.question_ids.size();
  c.index = session.cursor;
  c.finished = session.finished();
  if (c.finished) return c;
  const QuestionState& state = session.states[session.cursor];
  c.question_id = session.question_ids[session.cursor];
  const Question* q = bank.find(c.question_id);
  if (q == nullptr) throw NotFoundError("question " + c.question_id + " is not in the bank");
  c.masked_text = q->masked_text;
  c.attempt_number = state.attempts_used + 1;
  if (state.hint_issued) c.hint = make_hint(q->target_word);
  return c;
}

SessionSummary summarize(std::span<const QuizSession> sessions) {
  SessionSummary out;
  std::size_t exact = 0, stemmed = 0, best_exact = 0, best_stem = 0;
  std::vector<std::string> unfinished;
  for (const QuizSession& s : sessions) {
    for (std::size_t i = 0; i < s.states.size(); ++i) {
      const QuestionState& st = s.states[i];
      if (!st.finalized()) {
        unfinished.push_back(s.question_ids[i]);
        continue;
      }
      const GradeResult& first = *st.first_grade;
      const GradeResult& last = *st.final_grade;
      exact += first.exact ? 1 : 0;
      stemmed += first.stem ? 1 : 0;
      best_exact += (first.exact || last.exact) ? 1 : 0;
      best_stem += (first.stem || last.stem) ? 1 : 0;
      ++out.n_questions;
    }
  }
  if (!unfinished.empty()) {
    std::string msg = "session not finished; remaining questions:";
    for (const std::string& id : unfinished) msg += " " + id;
    throw StateError(msg);
  }
  if (out.n_questions == 0) throw StateError("no questions to summarize");
  const auto n = static_cast<double>(out.n_questions);
  out.exact_ratio = 100.0 * static_cast<double>(exact) / n;
  out.stem_ratio = 100.0 * static_cast<double>(stemmed) / n;
  out.with_hint_exact_ratio = 100.0 * static_cast<double>(best_exact) / n;
  out.with_hint_stem_ratio = 100.0 * static_cast<double>(best_stem) / n;
  return out;
}

SessionSummary summarize(const QuizSession& session) {
  return summarize(std::span<const QuizSession>(&session, 1));
}

QuizSession replay_session(QuizSession created, const QuestionBank& bank,
                           std::span<const AnswerLogRecord> answers) {
  for (const AnswerLogRecord& a : answers) {
    if (a.session_id != created.session_id) {
      throw ValidationError("answer for session " + a.session_id + " replayed into " +
                            created.session_id);
    }
    const SubmitResult r = apply_submission(created, bank, a.question_id, a.raw_answer);
    if (r.grade.exact != a.exact || r.grade.stem != a.stem ||
        r.grade.attempt_number != a.attempt_number || r.hint.has_value() != a.hint_issued) {
      throw ValidationError("replayed answer to " + a.question_id + " in session " +
                            a.session_id + " disagrees with the log");
    }
  }
  return created;
}

json session_record_to_json(const QuizSession& s) {
  return {{"session_id", s.session_id},     {"question_ids", s.question_ids},
          {"hint_mode", s.hint_mode},       {"n_questions", s.params.n_questions},
          {"min_gap", s.params.min_gap},    {"seed", s.params.seed},
          {"created_at", s.created_at}};
}

QuizSession session_from_record(const json& j) {
  QuizSession s;
  try {
    s.session_id = j.at("session_id").get<std::string>();
    s.question_ids = j.at("question_ids").get<std::vector<std::string>>();
    s.hint_mode = j.at("hint_mode").get<bool>();
    s.params.n_questions = j.at("n_questions").get<std::size_t>();
    s.params.min_gap = j.at("min_gap").get<double>();
    s.params.seed = j.at("seed").get<std::uint64_t>();
    s.params.hint_mode = s.hint_mode;
    s.created_at = j.value("created_at", std::string());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad session record: ") + e.what());
  }
  s.states.resize(s.question_ids.size());
  return s;
}

// -- QuizService --------------------------------------------------------------

QuizService::QuizService(QuestionBank bank, std::optional<std::filesystem::path> data_dir,
                         Clock clock)
    : bank_(std::move(bank)), data_dir_(std::move(data_dir)), clock_(std::move(clock)) {
  if (data_dir_) {
    std::filesystem::create_directories(*data_dir_);
    replay_from_disk();
  }
}

std::filesystem::path QuizService::sessions_path() const {
  return data_dir_ ? *data_dir_ / "sessions.jsonl" : std::filesystem::path();
}

std::filesystem::path QuizService::answers_path() const {
  return data_dir_ ? *data_dir_ / "answers.jsonl" : std::filesystem::path();
}

void QuizService::replay_from_disk() {
  std::vector<QuizSession> created;
  if (std::ifstream in(sessions_path()); in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw ValidationError(sessions_path().string() + ":" + std::to_string(line_no) +
                              ": malformed JSON");
      }
      created.push_back(session_from_record(j));
    }
  }
  std::vector<AnswerLogRecord> log = load_answer_log(answers_path());

  std::map<std::string, std::vector<AnswerLogRecord>> by_session;
  for (const AnswerLogRecord& r : log) by_session[r.session_id].push_back(r);
  for (QuizSession& s : created) {
    auto answers = by_session.extract(s.session_id);
    std::vector<AnswerLogRecord> mine = answers ? std::move(answers.mapped())
                                                : std::vector<AnswerLogRecord>{};
    auto e = std::make_unique<Entry>();
    const std::string id = s.session_id;
    e->session = replay_session(std::move(s), bank_, mine);
    if (!sessions_.emplace(id, std::move(e)).second) {
      throw ValidationError("duplicate session id " + id + " in " + sessions_path().string());
    }
  }
  if (!by_session.empty()) {
    throw ValidationError("answer log references unknown session " + by_session.begin()->first);
  }
  next_session_ = sessions_.size() + 1;
  log_ = std::move(log);
}

QuizService::Entry& QuizService::entry(const std::string& session_id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  return *it->second;
}

QuizSession QuizService::create_session(const SessionParams& params) {
  std::unique_lock lock(sessions_mu_);
  char id[32];
  std::snprintf(id, sizeof id, "s%06zu", next_session_);
  QuizSession s = new_session(id, bank_, params, clock_());
  if (data_dir_) {
    std::ofstream out(sessions_path(), std::ios::binary | std::ios::app);
    out << session_record_to_json(s).dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot persist session to " + sessions_path().string());
  }
  auto e = std::make_unique<Entry>();
  e->session = s;
  sessions_.emplace(s.session_id, std::move(e));
  ++next_session_;
  return s;
}

SubmitResult QuizService::submit_answer(const std::string& session_id,
                                        const std::string& question_id, std::string_view text) {
  Entry& e = entry(session_id);
  std::lock_guard session_lock(e.mu);
  QuizSession next = e.session;
  SubmitResult result = apply_submission(next, bank_, question_id, text);

  AnswerLogRecord rec;
  rec.session_id = session_id;
  rec.question_id = question_id;
  rec.attempt_number = result.grade.attempt_number;
  rec.raw_answer = std::string(text);
  rec.exact = result.grade.exact;
  rec.stem = result.grade.stem;
  rec.hint_issued = result.hint.has_value();
  rec.used_hint = result.grade.used_hint;
  rec.timestamp = clock_();
  {
    std::lock_guard log_lock(log_mu_);
    if (data_dir_) append_answer_log(answers_path(), {rec});
    log_.push_back(std::move(rec));
  }
  e.session = std::move(next);
  return result;
}

CurrentQuestion QuizService::current(const std::string& session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  return current_question(e.session, bank_);
}

SessionSummary QuizService::session_summary(const std::string& session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  return summarize(e.session);
}

QuizSession QuizService::session(const std::string& session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  return e.session;
}

std::vector<AnswerLogRecord> QuizService::answer_log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

std::vector<QuestionStats> QuizService::question_stats() const {
  return aggregate(bank_, answer_log());
}

}  // namespace clozer
