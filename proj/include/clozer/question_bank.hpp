#ifndef CLOZER_QUESTION_BANK_HPP_
#define CLOZER_QUESTION_BANK_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clozer/mlm_backend.hpp"
#include "json.hpp"

namespace clozer {

// Marker shown to learners in place of the target word.
inline constexpr std::string_view kBlankMarker = "(____)";

struct QuestionSource {
  std::string document;
  std::string sentence_id;

  bool operator==(const QuestionSource&) const = default;
};

struct Question {
  std::string question_id;
  std::string masked_text;
  std::string target_word;
  double phi = 0.0;
  double gini = 0.0;
  double rw = 0.0;
  std::size_t target_rank = 0;
  std::vector<Candidate> top_candidates;
  QuestionSource source;
  std::string model_name;
  std::string created_at;
  // Fields this version does not know about, kept for round trips.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  bool operator==(const Question&) const = default;
};

nlohmann::ordered_json question_to_json(const Question& q);
// Throws ValidationError on missing or mistyped fields.
Question question_from_json(const nlohmann::ordered_json& j);

// Read-only collection of questions indexed by id.
class QuestionBank {
 public:
  QuestionBank() = default;
  // Throws ValidationError on duplicate ids.
  explicit QuestionBank(std::vector<Question> questions);

  const std::vector<Question>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }
  bool empty() const { return questions_.empty(); }
  const Question* find(const std::string& id) const;

 private:
  std::vector<Question> questions_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One JSON object per line. Written to a temporary file and renamed into
// place.
void save_bank(const std::vector<Question>& questions, const std::filesystem::path& path);
std::string serialize_bank(const std::vector<Question>& questions);

// Errors name the line number (malformed line) or the id (duplicates).
QuestionBank load_bank(const std::filesystem::path& path);
QuestionBank parse_bank(std::string_view contents, const std::string& origin = "bank");

enum class SelectOrder { kPhiDescending, kPhiAscending, kBankOrder };

struct SelectFilter {
  std::optional<double> min_gap;
  std::optional<std::string> target_word;
  std::optional<std::size_t> limit;
  SelectOrder order = SelectOrder::kPhiDescending;
};

// Questions with phi >= min_gap (and matching target), sorted by `order`
// with question_id as tie-break, truncated to `limit`.
std::vector<Question> select(const QuestionBank& bank, const SelectFilter& filter);

}  // namespace clozer

#endif  // CLOZER_QUESTION_BANK_HPP_
