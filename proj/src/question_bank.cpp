#include "clozer/question_bank.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "clozer/error.hpp"

namespace clozer {

using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 11> kKnownFields = {
    "question_id", "masked_text", "target_word", "phi",        "gini",      "rw",
    "target_rank", "top_candidates", "source",   "model_name", "created_at"};

template <typename T>
T required(const ordered_json& j, const char* key) {
  if (!j.contains(key)) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

ordered_json question_to_json(const Question& q) {
  ordered_json cands = ordered_json::array();
  for (const Candidate& c : q.top_candidates) cands.push_back({c.word, c.confidence});
  ordered_json j = {
      {"question_id", q.question_id},
      {"masked_text", q.masked_text},
      {"target_word", q.target_word},
      {"phi", q.phi},
      {"gini", q.gini},
      {"rw", q.rw},
      {"target_rank", q.target_rank},
      {"top_candidates", std::move(cands)},
      {"source", {{"document", q.source.document}, {"sentence_id", q.source.sentence_id}}},
      {"model_name", q.model_name},
      {"created_at", q.created_at},
  };
  for (const auto& [key, value] : q.extra.items()) j[key] = value;
  return j;
}

Question question_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("question must be a JSON object");
  Question q;
  q.question_id = required<std::string>(j, "question_id");
  q.masked_text = required<std::string>(j, "masked_text");
  q.target_word = required<std::string>(j, "target_word");
  q.phi = required<double>(j, "phi");
  q.gini = required<double>(j, "gini");
  q.rw = required<double>(j, "rw");
  q.target_rank = required<std::size_t>(j, "target_rank");
  q.model_name = required<std::string>(j, "model_name");
  q.created_at = required<std::string>(j, "created_at");

  const ordered_json& cands = j.contains("top_candidates") ? j.at("top_candidates")
                                                           : ordered_json();
  if (!cands.is_array()) throw ValidationError("field 'top_candidates' must be an array");
  for (const ordered_json& c : cands) {
    if (!c.is_array() || c.size() != 2 || !c[0].is_string() || !c[1].is_number()) {
      throw ValidationError("top_candidates entries must be [word, confidence]");
    }
    q.top_candidates.push_back({c[0].get<std::string>(), c[1].get<double>()});
  }
  const ordered_json& src = j.contains("source") ? j.at("source") : ordered_json();
  if (!src.is_object()) throw ValidationError("field 'source' must be an object");
  q.source.document = required<std::string>(src, "document");
  q.source.sentence_id = required<std::string>(src, "sentence_id");

  for (const auto& [key, value] : j.items()) {
    if (std::find(kKnownFields.begin(), kKnownFields.end(), key) == kKnownFields.end()) {
      q.extra[key] = value;
    }
  }
  return q;
}

QuestionBank::QuestionBank(std::vector<Question> questions)
    : questions_(std::move(questions)) {
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    if (!index_.emplace(questions_[i].question_id, i).second) {
      throw ValidationError("duplicate question_id '" + questions_[i].question_id + "'");
    }
  }
}

const Question* QuestionBank::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &questions_[it->second];
}

std::string serialize_bank(const std::vector<Question>& questions) {
  std::string out;
  for (const Question& q : questions) {
    out += question_to_json(q).dump();
    out += '\n';
  }
  return out;
}

void save_bank(const std::vector<Question>& questions, const std::filesystem::path& path) {
  QuestionBank check(questions);  // rejects duplicate ids before touching disk
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << serialize_bank(questions);
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename bank into " + path.string() + ": " + ec.message());
  }
}

QuestionBank parse_bank(std::string_view contents, const std::string& origin) {
  std::vector<Question> questions;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ValidationError(where + ": malformed JSON");
    try {
      questions.push_back(question_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return QuestionBank(std::move(questions));
}

QuestionBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open question bank " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_bank(buf.str(), path.string());
}

std::vector<Question> select(const QuestionBank& bank, const SelectFilter& filter) {
  std::vector<Question> out;
  for (const Question& q : bank.questions()) {
    if (filter.min_gap && q.phi < *filter.min_gap) continue;
    if (filter.target_word && q.target_word != *filter.target_word) continue;
    out.push_back(q);
  }
  switch (filter.order) {
    case SelectOrder::kPhiDescending:
      std::stable_sort(out.begin(), out.end(), [](const Question& a, const Question& b) {
        if (a.phi != b.phi) return a.phi > b.phi;
        return a.question_id < b.question_id;
      });
      break;
    case SelectOrder::kPhiAscending:
      std::stable_sort(out.begin(), out.end(), [](const Question& a, const Question& b) {
        if (a.phi != b.phi) return a.phi < b.phi;
        return a.question_id < b.question_id;
      });
      break;
    case SelectOrder::kBankOrder:
      break;
  }
  if (filter.limit && out.size() > *filter.limit) out.resize(*filter.limit);
  return out;
}

}  // namespace clozer
