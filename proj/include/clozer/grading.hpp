#ifndef CLOZER_GRADING_HPP_
#define CLOZER_GRADING_HPP_

#include <span>
#include <string>
#include <string_view>

namespace clozer {

// English Snowball (Porter2) stemmer. Input is expected lowercase; words of
// one or two letters are returned unchanged.
std::string stem(std::string_view word);

// Trim surrounding whitespace, then lowercase.
std::string normalize_answer(std::string_view text);

struct GradeResult {
  bool exact = false;
  bool stem = false;
  std::string normalized_answer;
  std::string normalized_truth;
  bool used_hint = false;
  int attempt_number = 1;

  bool operator==(const GradeResult&) const = default;
};

// Case-insensitive exact and stem match. Empty answers and answers with
// internal whitespace are wrong on both counts. Throws std::invalid_argument
// if the truth is empty.
GradeResult grade(std::string_view answer, std::string_view truth,
                  int attempt_number = 1, bool used_hint = false);

struct Hint {
  enum class Kind { kFirstLetter };
  Kind kind = Kind::kFirstLetter;
  char value = '\0';

  bool operator==(const Hint&) const = default;
};

// Lowercased first character of the ground truth.
Hint make_hint(std::string_view truth);

struct SessionScore {
  double exact_ratio = 0.0;  // percent
  double stem_ratio = 0.0;   // percent
};

// Percent of grades that are exact / stem matches. Throws
// std::invalid_argument on an empty list.
SessionScore session_score(std::span<const GradeResult> grades);

}  // namespace clozer

#endif  // CLOZER_GRADING_HPP_
