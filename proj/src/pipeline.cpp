#include "clozer/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>
#include <unordered_map>
#include <sstream>

#include "clozer/error.hpp"
#include "clozer/seeded.hpp"

namespace clozer {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string display_text(const MaskedSentence& masked) {
  std::string text = masked.masked_text;
  const std::size_t at = text.find(masked.placeholder);
  text.replace(at, masked.placeholder.size(), kBlankMarker);
  return text;
}

Question make_question(const MaskedSentence& masked, const SentenceRecord& record,
                       const MaskPrediction& prediction, const GapScoreResult& score,
                       const std::string& model_name, const std::string& created_at) {
  Question q;
  q.question_id = masked.target_word + "@" + record.id;
  q.masked_text = display_text(masked);
  q.target_word = masked.target_word;
  q.phi = score.phi;
  q.gini = score.gini;
  q.rw = score.rw;
  q.target_rank = score.target_rank_j;
  const std::size_t shown = std::min<std::size_t>(5, prediction.candidates.size());
  q.top_candidates.assign(prediction.candidates.begin(),
                          prediction.candidates.begin() + static_cast<std::ptrdiff_t>(shown));
  q.source = {record.source.document, record.id};
  q.model_name = model_name;
  q.created_at = created_at;
  return q;
}

std::vector<Question> generate_for_target(const GenerationJob& job, const std::string& target,
                                          const std::vector<SentenceRecord>& corpus,
                                          const MaskPredictor& backend, TargetReport& rep) {
  const std::vector<SentenceRecord> extracted = extract_target_sentences(corpus, target);
  const std::vector<SentenceRecord> kept = filter_sentences(extracted, target, job.extraction);
  rep.extracted = extracted.size();
  rep.filtered = kept.size();
  rep.filtered_out = extracted.size() - kept.size();
  if (kept.empty()) return {};

  if (!backend.in_vocab(target)) {
    rep.out_of_vocab = kept.size();
    for (const SentenceRecord& rec : kept) {
      rep.skipped_sentences.push_back(
          {rec.id, SkipReason::kOutOfVocab, "target is not a single vocabulary entry"});
    }
    return {};
  }

  std::vector<MaskedSentence> masked;
  masked.reserve(kept.size());
  for (const SentenceRecord& rec : kept) {
    masked.push_back(mask_sentence(rec, target, 0, job.extraction.mask_placeholder));
  }
  const std::vector<PredictOutcome> outcomes = predict_batch(backend, masked, job.parallelism);

  std::vector<ScoredSentence> scored;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const PredictOutcome& out = outcomes[i];
    if (!out.ok()) {
      if (out.error_kind == PredictErrorKind::kTransport) throw TransportError(out.error);
      ++rep.no_prediction;
      rep.skipped_sentences.push_back({kept[i].id, SkipReason::kNoPrediction, out.error});
      continue;
    }
    ++rep.predicted;
    const GapScoreResult score = gap(*out.prediction, target, job.k);
    if (!score.found) {
      ++rep.target_absent;
      rep.skipped_sentences.push_back(
          {kept[i].id, SkipReason::kTargetAbsent, "target not among candidates"});
      continue;
    }
    position.emplace(kept[i].id, i);
    scored.push_back({kept[i].id, score});
  }
  rep.scored = scored.size();

  std::vector<Question> questions;
  for (const ScoredSentence& entry : rank(std::move(scored)).entries) {
    if (entry.score.phi < job.min_gap) break;
    ++rep.above_threshold;
    if (static_cast<int>(questions.size()) >= job.per_target_limit) continue;
    const std::size_t i = position.at(entry.sentence_id);
    questions.push_back(make_question(masked[i], kept[i], *outcomes[i].prediction, entry.score,
                                      backend.descriptor().model_name, job.created_at));
  }
  rep.selected = questions.size();
  return questions;
}

}  // namespace

void GenerationJob::validate() const {
  extraction.validate();
  if (targets.empty()) throw ValidationError("no targets");
  std::set<std::string> seen;
  for (const std::string& t : targets) {
    if (!seen.insert(t).second) throw ValidationError("duplicate target '" + t + "'");
    if (t.empty() || t != to_lower(t) || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw ValidationError("target '" + t + "' must be a single lowercase word");
    }
  }
  if (!(min_gap >= 0.0 && min_gap < 1.0)) throw ValidationError("min_gap must lie in [0, 1)");
  if (per_target_limit < 1) throw ValidationError("per_target_limit must be at least 1");
  if (k < 1) throw ValidationError("k must be at least 1");
  if (parallelism < 1) throw ValidationError("parallelism must be at least 1");
}

const char* skip_reason_code(SkipReason reason) {
  switch (reason) {
    case SkipReason::kOutOfVocab:
      return "OUT_OF_VOCAB";
    case SkipReason::kNoPrediction:
      return "NO_PREDICTION";
    case SkipReason::kTargetAbsent:
      return "TARGET_ABSENT";
  }
  return "UNKNOWN";
}

std::size_t GenerationReport::total_selected() const {
  return std::accumulate(targets.begin(), targets.end(), std::size_t{0},
                         [](std::size_t acc, const TargetReport& t) { return acc + t.selected; });
}

GenerationOutput run_generation(const GenerationJob& job,
                                const std::vector<SentenceRecord>& corpus,
                                const MaskPredictor& backend) {
  job.validate();
  if (corpus.empty()) throw ValidationError("corpus is empty");
  const auto job_start = Clock::now();

  GenerationOutput out;
  for (const std::string& target : job.targets) {
    const auto start = Clock::now();
    TargetReport rep;
    rep.target = target;
    std::vector<Question> qs = generate_for_target(job, target, corpus, backend, rep);
    rep.elapsed_ms = ms_since(start);
    out.report.targets.push_back(std::move(rep));
    out.questions.insert(out.questions.end(), std::make_move_iterator(qs.begin()),
                         std::make_move_iterator(qs.end()));
  }

  if (job.sample && job.sample->count < out.questions.size()) {
    std::vector<std::size_t> order(out.questions.size());
    std::iota(order.begin(), order.end(), 0);
    seeded_shuffle(order, job.sample->seed);
    order.resize(job.sample->count);
    std::sort(order.begin(), order.end());
    std::vector<Question> sampled;
    sampled.reserve(order.size());
    for (std::size_t i : order) sampled.push_back(std::move(out.questions[i]));
    out.report.sampled_out = out.questions.size() - sampled.size();
    out.questions = std::move(sampled);
  }
  out.report.elapsed_ms = ms_since(job_start);
  return out;
}

std::string format_report(const GenerationReport& report, bool with_timing) {
  std::ostringstream os;
  os << "target\textracted\tfiltered_out\tkept\tpredicted\tout_of_vocab\tno_prediction"
        "\ttarget_absent\tscored\tabove_threshold\tselected";
  if (with_timing) os << "\tms";
  os << '\n';
  for (const TargetReport& t : report.targets) {
    os << t.target << '\t' << t.extracted << '\t' << t.filtered_out << '\t' << t.filtered << '\t'
       << t.predicted << '\t' << t.out_of_vocab << '\t' << t.no_prediction << '\t'
       << t.target_absent << '\t' << t.scored << '\t' << t.above_threshold << '\t'
       << t.selected;
    if (with_timing) os << '\t' << static_cast<long long>(t.elapsed_ms + 0.5);
    os << '\n';
  }
  for (const TargetReport& t : report.targets) {
    for (const SkippedSentence& s : t.skipped_sentences) {
      os << "skipped\t" << t.target << '\t' << s.sentence_id << '\t'
         << skip_reason_code(s.reason) << '\t' << s.detail << '\n';
    }
  }
  if (report.sampled_out > 0) os << "sampled_out\t" << report.sampled_out << '\n';
  os << "total_selected\t" << report.total_selected() << '\n';
  return os.str();
}

}  // namespace clozer
