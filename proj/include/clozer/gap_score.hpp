#ifndef CLOZER_GAP_SCORE_HPP_
#define CLOZER_GAP_SCORE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clozer/mlm_backend.hpp"

namespace clozer {

inline constexpr std::size_t kDefaultTopK = 2;

// Positive confidences sorted best first; rank r (1-based) is values()[r - 1].
class ConfidenceVector {
 public:
  // Throws ValidationError if `values` is empty, holds a non-positive or
  // non-finite entry, or is not sorted non-increasing.
  explicit ConfidenceVector(std::vector<double> values);

  // Sorts descending before validating. Useful for raw or shuffled input.
  static ConfidenceVector from_unsorted(std::vector<double> values);
  static ConfidenceVector from_prediction(const MaskPrediction& prediction);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t rank0) const { return values_[rank0]; }

  // The tail starting at 1-based `rank`.
  ConfidenceVector tail_from(std::size_t rank) const;

 private:
  std::vector<double> values_;
};

// Cumulative share of the i smallest confidences (i in [0, N]).
// lorenz(c, 0) == 0 and lorenz(c, N) == 1. Throws std::out_of_range if i > N.
double lorenz(const ConfidenceVector& c, std::size_t i);

// Gini coefficient from the trapezoid rule over the Lorenz curve of the
// ascending ordering:
//   1 - (1/N) * sum_{i=1..N} (L(i) + L(i-1))
// Lies in [0, 1 - 1/N]. Zero for a single element or a uniform vector.
double gini(const ConfidenceVector& c);

// c_j / (c_1 + ... + c_k), with 1-based rank j. Throws std::out_of_range if
// j is not a rank of c, std::invalid_argument if k < 1 or k > N.
double reweight(const ConfidenceVector& c, std::size_t j, std::size_t k);

struct GapScoreResult {
  double phi = 0.0;
  double gini = 0.0;
  double rw = 0.0;
  // 1-based rank of the target among the candidates; 0 when not found.
  std::size_t target_rank_j = 0;
  bool found = false;

  bool operator==(const GapScoreResult&) const = default;
};

// Gap score of `target` in `prediction`: gini over the tail starting at the
// target's rank times reweight over the whole list. The rank is the first
// case-insensitive token match. If there are fewer than k candidates, k is
// reduced to the candidate count. A missing target yields found == false and
// phi == 0.
GapScoreResult gap(const MaskPrediction& prediction, std::string_view target,
                   std::size_t k = kDefaultTopK);

struct ScoredSentence {
  std::string sentence_id;
  GapScoreResult score;

  bool operator==(const ScoredSentence&) const = default;
};

// Sorted by phi descending; equal phi ordered by sentence_id ascending.
struct RankedQuestions {
  std::vector<ScoredSentence> entries;
};

// Throws ValidationError on duplicate sentence ids.
RankedQuestions rank(std::vector<ScoredSentence> results);

}  // namespace clozer

#endif  // CLOZER_GAP_SCORE_HPP_
