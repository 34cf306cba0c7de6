#ifndef CLOZER_ANSWER_LOG_HPP_
#define CLOZER_ANSWER_LOG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace clozer {

// One submitted answer. The log is append-only and ordered per session.
struct AnswerLogRecord {
  std::string session_id;
  std::string question_id;
  int attempt_number = 1;  // 1 or 2
  std::string raw_answer;
  bool exact = false;
  bool stem = false;
  // A first-letter hint was returned in response to this submission.
  bool hint_issued = false;
  // The hint was visible while this answer was typed.
  bool used_hint = false;
  std::string timestamp;

  bool operator==(const AnswerLogRecord&) const = default;
};

nlohmann::json to_json(const AnswerLogRecord& r);
// Throws ValidationError on missing fields or attempt_number outside {1, 2}.
AnswerLogRecord answer_from_json(const nlohmann::json& j);

// Reads a JSON-lines answer log; errors carry the line number. A missing file
// reads as an empty log.
std::vector<AnswerLogRecord> load_answer_log(const std::filesystem::path& path);
std::vector<AnswerLogRecord> parse_answer_log(std::string_view contents,
                                              const std::string& origin = "log");

// Appends records, one line each, flushing before returning.
void append_answer_log(const std::filesystem::path& path,
                       const std::vector<AnswerLogRecord>& records);

}  // namespace clozer

#endif  // CLOZER_ANSWER_LOG_HPP_
