#include <map>
#include <set>

#include "clozer/error.hpp"
#include "clozer/pipeline.hpp"
#include "doctest.h"
#include "oracle/gap_oracle.hpp"

using namespace clozer;

namespace {

// Predictions keyed by sentence id, with an optional out-of-vocabulary set
// and a set of ids whose lookup fails in transport.
class FakeBackend : public MaskPredictor {
 public:
  std::map<std::string, MaskPrediction> rows;
  std::set<std::string> oov;
  std::set<std::string> broken;
  BackendDescriptor desc;

  FakeBackend() { desc.model_name = "fake"; }
  const BackendDescriptor& descriptor() const override { return desc; }
  MaskPrediction predict(const MaskedSentence& m) const override {
    if (broken.count(m.sentence_id)) throw TransportError("connection reset");
    auto it = rows.find(m.sentence_id);
    if (it == rows.end()) throw NotFoundError("no row for " + m.sentence_id);
    return it->second;
  }
  bool in_vocab(std::string_view w) const override { return !oov.count(std::string(w)); }
};

MaskPrediction pred(std::vector<Candidate> cs) {
  const std::size_t n = cs.size();
  return {std::move(cs), n};
}

// A long tail of small values pushes the gini of the slice towards one.
MaskPrediction peaked(const std::string& top, double p, std::size_t tail = 30) {
  MaskPrediction m;
  m.candidates.push_back({top, p});
  for (std::size_t i = 0; i < tail; ++i) {
    m.candidates.push_back({"t" + std::to_string(i), (1.0 - p) / (2.0 * static_cast<double>(tail))});
  }
  m.truncation_m = m.candidates.size();
  return m;
}

SentenceRecord rec(const std::string& id, const std::string& text) {
  return {id, text, tokenize(text), {"doc", 0}};
}

GenerationJob job_for(std::vector<std::string> targets) {
  GenerationJob job;
  job.targets = std::move(targets);
  job.extraction.min_tokens = 1;
  job.created_at = "2024-01-01T00:00:00Z";
  job.parallelism = 2;
  return job;
}

double oracle_phi(const MaskPrediction& p, const std::string& target) {
  std::vector<std::pair<std::string, double>> pairs;
  for (const auto& c : p.candidates) pairs.emplace_back(c.word, c.confidence);
  return static_cast<double>(oracle::gap(pairs, target).phi);
}

}  // namespace

TEST_CASE("job validation") {
  GenerationJob job = job_for({"peace"});
  CHECK_NOTHROW(job.validate());
  job.targets = {};
  CHECK_THROWS_WITH_AS(job.validate(), "no targets", ValidationError);
  job.targets = {"peace", "peace"};
  CHECK_THROWS_AS(job.validate(), ValidationError);
  job.targets = {"Peace"};
  CHECK_THROWS_AS(job.validate(), ValidationError);
  job.targets = {"peace"};
  for (double bad : {-0.1, 1.0, 1.5}) {
    job.min_gap = bad;
    CHECK_THROWS_AS(job.validate(), ValidationError);
  }
  job.min_gap = 0.0;
  CHECK_NOTHROW(job.validate());
  job.per_target_limit = 0;
  CHECK_THROWS_AS(job.validate(), ValidationError);
}

TEST_CASE("threshold selects three of five sentences, best first") {
  FakeBackend be;
  std::vector<SentenceRecord> corpus;
  const std::vector<double> tops = {0.95, 0.40, 0.90, 0.30, 0.97};
  for (std::size_t i = 0; i < tops.size(); ++i) {
    const std::string id = "d#" + std::to_string(i);
    corpus.push_back(rec(id, "the peace of mind number " + std::to_string(i)));
    be.rows[id] = peaked("peace", tops[i]);
  }
  std::vector<std::pair<double, std::string>> expected;
  for (const auto& [id, p] : be.rows) {
    const double phi = oracle_phi(p, "peace");
    if (phi >= 0.8) expected.push_back({phi, "peace@" + id});
  }
  std::sort(expected.rbegin(), expected.rend());
  REQUIRE(expected.size() == 3);

  const GenerationOutput out = run_generation(job_for({"peace"}), corpus, be);
  REQUIRE(out.questions.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.questions[i].question_id == expected[i].second);
    CHECK(std::abs(out.questions[i].phi - expected[i].first) < 1e-9);
    CHECK(out.questions[i].phi >= 0.8);
  }
  const Question& q = out.questions[0];
  CHECK(q.masked_text.find("(____)") != std::string::npos);
  CHECK(q.masked_text.find("peace") == std::string::npos);
  CHECK(q.top_candidates.size() == 5);
  CHECK(q.model_name == "fake");
  CHECK(q.created_at == "2024-01-01T00:00:00Z");
  CHECK(q.source.sentence_id == "d#4");

  const TargetReport& r = out.report.targets.at(0);
  CHECK(r.extracted == 5);
  CHECK(r.scored == 5);
  CHECK(r.above_threshold == 3);
  CHECK(r.selected == 3);
}

TEST_CASE("min_gap 0 with limit 1 keeps the argmax per target") {
  FakeBackend be;
  be.rows["d#0"] = pred({{"peace", 0.5}, {"war", 0.3}});
  be.rows["d#1"] = pred({{"peace", 0.9}, {"war", 0.05}});
  be.rows["d#2"] = pred({{"mind", 0.6}, {"body", 0.3}});
  be.rows["d#3"] = pred({{"mind", 0.3}, {"body", 0.2}, {"soul", 0.1}});
  const std::vector<SentenceRecord> corpus = {rec("d#0", "peace one"), rec("d#1", "peace two"),
                                              rec("d#2", "mind three"), rec("d#3", "mind four")};
  GenerationJob job = job_for({"peace", "mind"});
  job.min_gap = 0.0;
  job.per_target_limit = 1;
  const GenerationOutput out = run_generation(job, corpus, be);
  REQUIRE(out.questions.size() == 2);
  CHECK(out.questions[0].question_id == "peace@d#1");
  CHECK(out.questions[1].target_word == "mind");
  const double a = oracle_phi(be.rows["d#2"], "mind"), b = oracle_phi(be.rows["d#3"], "mind");
  CHECK(out.questions[1].question_id == (a >= b ? "mind@d#2" : "mind@d#3"));
  CHECK(out.report.targets[0].above_threshold == 2);
  CHECK(out.report.targets[0].selected == 1);
}

TEST_CASE("report conservation and skip reasons") {
  FakeBackend be;
  be.rows["d#0"] = peaked("peace", 0.9);
  be.rows["d#2"] = pred({{"war", 0.6}, {"calm", 0.3}});
  const std::vector<SentenceRecord> corpus = {
      rec("d#0", "peace here now"), rec("d#1", "peace there now"), rec("d#2", "peace again now"),
      rec("d#3", "peace peace twice"), rec("d#4", "nothing relevant")};
  GenerationJob job = job_for({"peace"});
  job.extraction.min_tokens = 3;
  const GenerationOutput out = run_generation(job, corpus, be);
  const TargetReport& r = out.report.targets.at(0);
  CHECK(r.extracted == 4);
  CHECK(r.filtered_out == 1);
  CHECK(r.no_prediction == 1);
  CHECK(r.target_absent == 1);
  CHECK(r.scored == 1);
  CHECK(r.extracted == r.filtered_out + r.skipped() + r.scored);
  REQUIRE(r.skipped_sentences.size() == 2);
  CHECK(r.skipped_sentences[0].sentence_id == "d#1");
  CHECK(r.skipped_sentences[0].reason == SkipReason::kNoPrediction);
  CHECK(r.skipped_sentences[1].reason == SkipReason::kTargetAbsent);

  const std::string text = format_report(out.report, false);
  CHECK(text.find("skipped\tpeace\td#1\tNO_PREDICTION") != std::string::npos);
  CHECK(text.find("skipped\tpeace\td#2\tTARGET_ABSENT") != std::string::npos);
  CHECK(text.find("total_selected\t1") != std::string::npos);
}

TEST_CASE("out-of-vocabulary targets are skipped without predictions") {
  FakeBackend be;
  be.oov = {"kerfuffle"};
  const std::vector<SentenceRecord> corpus = {rec("d#0", "a kerfuffle arose"),
                                              rec("d#1", "another kerfuffle today")};
  const GenerationOutput out = run_generation(job_for({"kerfuffle"}), corpus, be);
  CHECK(out.questions.empty());
  const TargetReport& r = out.report.targets.at(0);
  CHECK(r.out_of_vocab == 2);
  CHECK(r.predicted == 0);
  CHECK(r.extracted == r.filtered_out + r.skipped() + r.scored);
  CHECK(std::string(skip_reason_code(r.skipped_sentences[0].reason)) == "OUT_OF_VOCAB");
}

TEST_CASE("transport failures abort the job") {
  FakeBackend be;
  be.rows["d#0"] = peaked("peace", 0.9);
  be.broken = {"d#1"};
  const std::vector<SentenceRecord> corpus = {rec("d#0", "peace a"), rec("d#1", "peace b")};
  CHECK_THROWS_AS(run_generation(job_for({"peace"}), corpus, be), TransportError);
}

TEST_CASE("empty corpus is an error") {
  FakeBackend be;
  CHECK_THROWS_AS(run_generation(job_for({"peace"}), {}, be), ValidationError);
}

TEST_CASE("seeded sampling is deterministic and keeps order") {
  FakeBackend be;
  std::vector<SentenceRecord> corpus;
  for (int i = 0; i < 12; ++i) {
    const std::string id = "d#" + std::to_string(i);
    corpus.push_back(rec(id, "peace number " + std::to_string(i)));
    be.rows[id] = peaked("peace", 0.90 + 0.005 * i);
  }
  GenerationJob job = job_for({"peace"});
  job.sample = SampleSpec{5, 42};
  const GenerationOutput a = run_generation(job, corpus, be);
  const GenerationOutput b = run_generation(job, corpus, be);
  REQUIRE(a.questions.size() == 5);
  CHECK(a.report.sampled_out == 7);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.questions[i] == b.questions[i]);
  for (std::size_t i = 1; i < 5; ++i) CHECK(a.questions[i - 1].phi >= a.questions[i].phi);

  job.sample = SampleSpec{50, 1};
  CHECK(run_generation(job, corpus, be).questions.size() == 12);
}

TEST_CASE("property: generation is deterministic across parallelism") {
  FakeBackend be;
  std::vector<SentenceRecord> corpus;
  for (int i = 0; i < 40; ++i) {
    const std::string id = "d#" + std::to_string(i);
    corpus.push_back(rec(id, "peace sentence " + std::to_string(i)));
    be.rows[id] = peaked("peace", 0.5 + 0.012 * i, 5 + i % 20);
  }
  GenerationJob job = job_for({"peace"});
  job.min_gap = 0.5;
  job.parallelism = 1;
  const auto serial = run_generation(job, corpus, be).questions;
  job.parallelism = 8;
  const auto parallel = run_generation(job, corpus, be).questions;
  CHECK(serial == parallel);
  for (const Question& q : serial) CHECK(q.phi >= 0.5);
}
