#include "clozer/answer_log.hpp"

#include <fstream>
#include <sstream>

#include "clozer/error.hpp"

namespace clozer {

using nlohmann::json;

json to_json(const AnswerLogRecord& r) {
  return {{"session_id", r.session_id},
          {"question_id", r.question_id},
          {"attempt_number", r.attempt_number},
          {"raw_answer", r.raw_answer},
          {"grade", {{"exact", r.exact}, {"stem", r.stem}}},
          {"hint_issued", r.hint_issued},
          {"used_hint", r.used_hint},
          {"timestamp", r.timestamp}};
}

AnswerLogRecord answer_from_json(const json& j) {
  AnswerLogRecord r;
  try {
    r.session_id = j.at("session_id").get<std::string>();
    r.question_id = j.at("question_id").get<std::string>();
    r.attempt_number = j.at("attempt_number").get<int>();
    r.raw_answer = j.at("raw_answer").get<std::string>();
    r.exact = j.at("grade").at("exact").get<bool>();
    r.stem = j.at("grade").at("stem").get<bool>();
    r.hint_issued = j.value("hint_issued", false);
    r.used_hint = j.value("used_hint", false);
    r.timestamp = j.value("timestamp", std::string());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad answer record: ") + e.what());
  }
  if (r.attempt_number != 1 && r.attempt_number != 2) {
    throw ValidationError("attempt_number must be 1 or 2");
  }
  return r;
}

std::vector<AnswerLogRecord> parse_answer_log(std::string_view contents,
                                              const std::string& origin) {
  std::vector<AnswerLogRecord> out;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError(where + ": malformed JSON");
    try {
      out.push_back(answer_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnswerLogRecord> load_answer_log(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open answer log " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_answer_log(buf.str(), path.string());
}

void append_answer_log(const std::filesystem::path& path,
                       const std::vector<AnswerLogRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  for (const AnswerLogRecord& r : records) out << to_json(r).dump() << '\n';
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace clozer
