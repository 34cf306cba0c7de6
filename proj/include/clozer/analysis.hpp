#ifndef CLOZER_ANALYSIS_HPP_
#define CLOZER_ANALYSIS_HPP_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "clozer/answer_log.hpp"
#include "clozer/question_bank.hpp"

namespace clozer {

struct QuestionStats {
  std::string question_id;
  std::size_t n_answers = 0;
  double exact_ratio = 0.0;  // percent
  double stem_ratio = 0.0;   // percent
  double phi = 0.0;
  // No first-attempt answers; ratios are placeholders.
  bool no_answers = false;
};

enum class MatchMetric { kExact, kStem };

// First-attempt correct ratios for every bank question, in bank order.
// Second attempts (hint-assisted) are ignored. Throws NotFoundError when a
// record references a question that is not in the bank.
std::vector<QuestionStats> aggregate(const QuestionBank& bank,
                                     std::span<const AnswerLogRecord> log);

// Sample Pearson correlation. Throws std::invalid_argument for mismatched or
// too short inputs and ValidationError("zero variance") for a constant series.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Correlation between phi and the chosen correct ratio over questions that
// have at least one answer.
double correlate(std::span<const QuestionStats> stats, MatchMetric metric = MatchMetric::kExact);

// CSV "question_id,phi,exact_ratio,stem_ratio,n", one row per answered
// question.
void export_scatter(std::span<const QuestionStats> stats, std::ostream& out);

}  // namespace clozer

#endif  // CLOZER_ANALYSIS_HPP_
