#include "clozer/grading.hpp"

#include <algorithm>
#include <stdexcept>

#include "clozer/text_corpus.hpp"

namespace clozer {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return to_lower(text);
}

GradeResult grade(std::string_view answer, std::string_view truth,
                  int attempt_number, bool used_hint) {
  GradeResult r;
  r.normalized_answer = normalize_answer(answer);
  r.normalized_truth = normalize_answer(truth);
  r.attempt_number = attempt_number;
  r.used_hint = used_hint;
  if (r.normalized_truth.empty()) throw std::invalid_argument("ground truth is empty");

  const bool single_word =
      !r.normalized_answer.empty() &&
      std::none_of(r.normalized_answer.begin(), r.normalized_answer.end(), is_space);
  if (!single_word) return r;

  r.exact = r.normalized_answer == r.normalized_truth;
  r.stem = r.exact || stem(r.normalized_answer) == stem(r.normalized_truth);
  return r;
}

Hint make_hint(std::string_view truth) {
  const std::string normalized = normalize_answer(truth);
  if (normalized.empty()) throw std::invalid_argument("ground truth is empty");
  return Hint{Hint::Kind::kFirstLetter, normalized.front()};
}

SessionScore session_score(std::span<const GradeResult> grades) {
  if (grades.empty()) throw std::invalid_argument("no grades to score");
  const auto n = static_cast<double>(grades.size());
  const auto exact = std::count_if(grades.begin(), grades.end(),
                                   [](const GradeResult& g) { return g.exact; });
  const auto stemmed = std::count_if(grades.begin(), grades.end(),
                                     [](const GradeResult& g) { return g.stem; });
  return {100.0 * static_cast<double>(exact) / n, 100.0 * static_cast<double>(stemmed) / n};
}

}  // namespace clozer
