#ifndef CLOZER_PIPELINE_HPP_
#define CLOZER_PIPELINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clozer/gap_score.hpp"
#include "clozer/mlm_backend.hpp"
#include "clozer/question_bank.hpp"
#include "clozer/text_corpus.hpp"

namespace clozer {

inline constexpr double kDefaultMinGap = 0.80;
inline constexpr int kDefaultPerTargetLimit = 20;

struct SampleSpec {
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

struct GenerationJob {
  std::vector<std::string> targets;
  ExtractionConfig extraction;
  std::size_t k = kDefaultTopK;
  double min_gap = kDefaultMinGap;
  int per_target_limit = kDefaultPerTargetLimit;
  // Concurrent backend calls.
  int parallelism = 8;
  // Draw this many of the selected questions at random (seeded).
  std::optional<SampleSpec> sample;
  // Stamped on every question.
  std::string created_at;

  // Throws ValidationError on out-of-range settings.
  void validate() const;
};

enum class SkipReason { kOutOfVocab, kNoPrediction, kTargetAbsent };

const char* skip_reason_code(SkipReason reason);

struct SkippedSentence {
  std::string sentence_id;
  SkipReason reason;
  std::string detail;
};

// Per-target bookkeeping. extracted == filtered_out + skipped() + scored.
struct TargetReport {
  std::string target;
  std::size_t extracted = 0;
  std::size_t filtered_out = 0;
  std::size_t filtered = 0;  // survived the filters
  std::size_t predicted = 0;
  std::size_t out_of_vocab = 0;
  std::size_t no_prediction = 0;
  std::size_t target_absent = 0;
  std::size_t scored = 0;
  std::size_t above_threshold = 0;
  std::size_t selected = 0;
  double elapsed_ms = 0.0;
  std::vector<SkippedSentence> skipped_sentences;

  std::size_t skipped() const { return out_of_vocab + no_prediction + target_absent; }
};

struct GenerationReport {
  std::vector<TargetReport> targets;
  std::size_t sampled_out = 0;
  double elapsed_ms = 0.0;

  std::size_t total_selected() const;
};

struct GenerationOutput {
  std::vector<Question> questions;
  GenerationReport report;
};

// Extract, filter, mask, predict, score, rank and select for every target.
// Questions come out grouped by target (job order), best phi first. Sentence
// level failures are recorded in the report; a transport failure of the
// backend aborts the job with TransportError.
GenerationOutput run_generation(const GenerationJob& job,
                                const std::vector<SentenceRecord>& corpus,
                                const MaskPredictor& backend);

std::string format_report(const GenerationReport& report, bool with_timing = true);

}  // namespace clozer

#endif  // CLOZER_PIPELINE_HPP_
