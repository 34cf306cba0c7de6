#include "clozer/gap_score.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_set>

#include "clozer/error.hpp"
#include "clozer/text_corpus.hpp"

namespace clozer {
namespace {

// Cumulative sums of the ascending ordering, normalized by the total.
// curve[i] == L(c, i).
std::vector<double> lorenz_curve(const ConfidenceVector& c) {
  std::vector<double> ascending(c.values().rbegin(), c.values().rend());
  double total = 0.0;
  for (double v : ascending) total += v;
  std::vector<double> curve(ascending.size() + 1, 0.0);
  double running = 0.0;
  for (std::size_t i = 0; i < ascending.size(); ++i) {
    running += ascending[i];
    curve[i + 1] = running / total;
  }
  curve.back() = 1.0;
  return curve;
}

}  // namespace

ConfidenceVector::ConfidenceVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("confidence vector is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
      throw ValidationError("confidence values must be positive and finite");
    }
    if (i > 0 && values_[i] > values_[i - 1] + kSortSlack) {
      throw ValidationError("confidence vector must be sorted non-increasing");
    }
  }
}

ConfidenceVector ConfidenceVector::from_unsorted(std::vector<double> values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  return ConfidenceVector(std::move(values));
}

ConfidenceVector ConfidenceVector::from_prediction(const MaskPrediction& prediction) {
  std::vector<double> values;
  values.reserve(prediction.candidates.size());
  for (const Candidate& cand : prediction.candidates) values.push_back(cand.confidence);
  return ConfidenceVector(std::move(values));
}

ConfidenceVector ConfidenceVector::tail_from(std::size_t rank) const {
  if (rank < 1 || rank > values_.size()) {
    throw std::out_of_range("rank outside confidence vector");
  }
  return ConfidenceVector(std::vector<double>(values_.begin() + (rank - 1), values_.end()));
}

double lorenz(const ConfidenceVector& c, std::size_t i) {
  if (i > c.size()) throw std::out_of_range("lorenz index beyond vector size");
  return lorenz_curve(c)[i];
}

double gini(const ConfidenceVector& c) {
  const std::vector<double> curve = lorenz_curve(c);
  const auto n = static_cast<double>(c.size());
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) area += curve[i] + curve[i - 1];
  // Rounding can push a uniform vector a few ulps below zero.
  return std::max(0.0, 1.0 - area / n);
}

double reweight(const ConfidenceVector& c, std::size_t j, std::size_t k) {
  if (j < 1 || j > c.size()) throw std::out_of_range("target rank outside vector");
  if (k < 1 || k > c.size()) {
    throw std::invalid_argument("top-k needs " + std::to_string(k) +
                                " candidates, have " + std::to_string(c.size()));
  }
  double top = 0.0;
  for (std::size_t i = 0; i < k; ++i) top += c[i];
  return c[j - 1] / top;
}

GapScoreResult gap(const MaskPrediction& prediction, std::string_view target,
                   std::size_t k) {
  GapScoreResult result;
  const auto& cands = prediction.candidates;
  const auto it = std::find_if(cands.begin(), cands.end(), [&](const Candidate& cand) {
    return iequals(cand.word, target);
  });
  if (it == cands.end()) return result;

  const ConfidenceVector c = ConfidenceVector::from_prediction(prediction);
  result.found = true;
  result.target_rank_j = static_cast<std::size_t>(it - cands.begin()) + 1;
  result.gini = gini(c.tail_from(result.target_rank_j));
  result.rw = reweight(c, result.target_rank_j, std::clamp<std::size_t>(k, 1, c.size()));
  result.phi = result.gini * result.rw;
  return result;
}

RankedQuestions rank(std::vector<ScoredSentence> results) {
  std::unordered_set<std::string> ids;
  for (const ScoredSentence& r : results) {
    if (!ids.insert(r.sentence_id).second) {
      throw ValidationError("duplicate sentence id '" + r.sentence_id + "'");
    }
  }
  std::sort(results.begin(), results.end(),
            [](const ScoredSentence& a, const ScoredSentence& b) {
              if (a.score.phi != b.score.phi) return a.score.phi > b.score.phi;
              return a.sentence_id < b.sentence_id;
            });
  return RankedQuestions{std::move(results)};
}

}  // namespace clozer
