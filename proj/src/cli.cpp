#include "clozer/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "clozer/analysis.hpp"
#include "clozer/error.hpp"
#include "clozer/grading.hpp"
#include "clozer/http_api.hpp"
#include "clozer/mlm_backend.hpp"
#include "clozer/pipeline.hpp"
#include "clozer/question_bank.hpp"
#include "clozer/service.hpp"
#include "clozer/text_corpus.hpp"

namespace clozer::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateOptions {
  std::vector<std::string> corpus;
  std::string format = "auto";
  std::string wordlist;
  std::string targets;
  std::string backend;
  std::string model_name;
  std::string mask_token = "[MASK]";
  std::string mask_placeholder = "[MASK]";
  int top_m = 50;
  std::size_t k = kDefaultTopK;
  double min_gap = kDefaultMinGap;
  int per_target_limit = kDefaultPerTargetLimit;
  int min_tokens = 8;
  int max_tokens = 30;
  bool no_proper_noun_exemption = false;
  bool keep_repeated_target = false;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
  std::string created_at;
  int jobs = 8;
};

struct RankOptions {
  std::string bank;
  std::optional<std::size_t> top;
};

struct GradeOptions {
  std::string truth;
  std::string answer;
};

struct ServeOptions {
  std::string bank;
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct AnalyzeOptions {
  std::string bank;
  std::string log;
  std::string data_dir;
  std::string out;
  std::string metric = "exact";
};

std::string default_data_dir() {
  const char* env = std::getenv("CLOZER_DATA_DIR");
  return env != nullptr && *env != '\0' ? env : "clozer-data";
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) {
    throw UsageError(std::string(flag) + ": no such file: " + path);
  }
}

std::vector<std::string> read_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read targets file " + path);
  std::vector<std::string> targets;
  std::string line;
  while (std::getline(in, line)) {
    const std::string word = normalize_answer(line);
    if (word.empty() || word.front() == '#') continue;
    if (std::find(targets.begin(), targets.end(), word) == targets.end()) {
      targets.push_back(word);
    }
  }
  return targets;
}

CorpusFormat format_for(const fs::path& file, const std::string& requested) {
  if (requested == "auto") {
    return file.extension() == ".jsonl" ? CorpusFormat::kJsonl : CorpusFormat::kPlaintext;
  }
  return *parse_corpus_format(requested);
}

std::vector<SentenceRecord> load_corpus(const GenerateOptions& opt, std::ostream& err) {
  std::vector<std::pair<CorpusInput, CorpusFormat>> inputs;
  for (const std::string& root : opt.corpus) {
    const fs::path p(root);
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& f : files) {
        inputs.push_back({{f, fs::relative(f, p).generic_string()}, format_for(f, opt.format)});
      }
    } else if (fs::is_regular_file(p)) {
      inputs.push_back({{p, p.filename().string()}, format_for(p, opt.format)});
    } else {
      throw UsageError("--corpus: no such file or directory: " + root);
    }
  }
  std::vector<SentenceRecord> corpus;
  for (const auto& [input, format] : inputs) {
    IngestResult r = ingest_corpus(std::vector<CorpusInput>{input}, format);
    for (const FileError& e : r.errors) {
      err << "warning: " << e.path.string() << ": " << e.message << '\n';
    }
    corpus.insert(corpus.end(), std::make_move_iterator(r.sentences.begin()),
                  std::make_move_iterator(r.sentences.end()));
  }
  return corpus;
}

int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  if (!(opt.min_gap >= 0.0 && opt.min_gap < 1.0)) {
    throw UsageError("--min-gap must lie in [0, 1)");
  }
  if (opt.corpus.empty()) throw UsageError("--corpus is required");
  if (opt.format != "auto" && !parse_corpus_format(opt.format)) {
    throw UsageError("--format must be auto, plaintext or jsonl");
  }
  require_file(opt.targets, "--targets");
  if (!opt.wordlist.empty()) require_file(opt.wordlist, "--wordlist");
  if (opt.out.empty()) throw UsageError("--out is required");

  BackendDescriptor backend;
  try {
    backend = parse_backend_spec(opt.backend);
  } catch (const ValidationError& e) {
    throw UsageError(std::string("--backend: ") + e.what());
  }
  if (backend.kind == BackendKind::kTabular) require_file(backend.endpoint, "--backend");
  if (!opt.model_name.empty()) backend.model_name = opt.model_name;
  backend.mask_token = opt.mask_token;
  backend.top_m = opt.top_m;
  backend.max_in_flight = opt.jobs;

  GenerationJob job;
  job.targets = read_targets(opt.targets);
  if (job.targets.empty()) throw UsageError("no targets");
  job.extraction.min_tokens = opt.min_tokens;
  job.extraction.max_tokens = opt.max_tokens;
  job.extraction.exempt_capitalized = !opt.no_proper_noun_exemption;
  job.extraction.drop_repeated_target = !opt.keep_repeated_target;
  job.extraction.mask_placeholder = opt.mask_placeholder;
  if (!opt.wordlist.empty()) job.extraction.word_list = WordList::load(opt.wordlist);
  job.k = opt.k;
  job.min_gap = opt.min_gap;
  job.per_target_limit = opt.per_target_limit;
  job.parallelism = opt.jobs;
  if (opt.sample) job.sample = SampleSpec{*opt.sample, opt.seed};
  job.created_at = opt.created_at.empty() ? iso8601_now() : opt.created_at;
  try {
    job.validate();
    backend.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }

  const std::vector<SentenceRecord> corpus = load_corpus(opt, err);
  if (corpus.empty()) {
    err << "error: corpus contains no sentences\n";
    return kExitRuntime;
  }
  const std::unique_ptr<MaskPredictor> predictor = make_backend(backend);
  const GenerationOutput result = run_generation(job, corpus, *predictor);

  save_bank(result.questions, opt.out);
  const std::string report = format_report(result.report);
  if (opt.report.empty()) {
    out << report;
  } else {
    std::ofstream rep(opt.report);
    rep << report;
    if (!rep) throw Error("cannot write report " + opt.report);
  }
  if (result.questions.empty()) {
    err << "error: no questions produced\n";
    return kExitRuntime;
  }
  out << "wrote " << result.questions.size() << " questions to " << opt.out << '\n';
  return kExitOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\t', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int cmd_rank(const RankOptions& opt, std::ostream& out) {
  require_file(opt.bank, "--bank");
  const QuestionBank bank = load_bank(opt.bank);
  SelectFilter filter;
  filter.limit = opt.top;
  out << "rank\tphi\tquestion_id\ttarget\tmasked_text\n";
  std::size_t r = 0;
  for (const Question& q : select(bank, filter)) {
    out << ++r << '\t' << std::fixed << std::setprecision(6) << q.phi << '\t' << q.question_id
        << '\t' << q.target_word << '\t' << one_line(q.masked_text) << '\n';
  }
  return kExitOk;
}

int cmd_grade(const GradeOptions& opt, std::ostream& out) {
  if (normalize_answer(opt.truth).empty()) throw UsageError("--truth must be non-empty");
  const GradeResult g = grade(opt.answer, opt.truth);
  out << "exact=" << (g.exact ? "true" : "false") << " stem=" << (g.stem ? "true" : "false")
      << " answer=" << g.normalized_answer << " truth=" << g.normalized_truth
      << " answer_stem=" << stem(g.normalized_answer) << " truth_stem=" << stem(g.normalized_truth)
      << '\n';
  return kExitOk;
}

std::atomic<bool> g_shutdown{false};

extern "C" void on_shutdown_signal(int) { g_shutdown = true; }

int cmd_serve(const ServeOptions& opt, std::ostream& out, std::ostream& err) {
  require_file(opt.bank, "--bank");
  if (opt.port < 0 || opt.port > 65535) throw UsageError("--port out of range");
  const std::string data_dir = opt.data_dir.empty() ? default_data_dir() : opt.data_dir;
  QuizService service(load_bank(opt.bank), fs::path(data_dir));
  HttpApi api(service);
  if (!api.bind(opt.host, opt.port)) {
    err << "error: cannot listen on " << opt.host << ":" << opt.port
        << " (port in use or not permitted)\n";
    return kExitRuntime;
  }
  g_shutdown = false;
  std::signal(SIGINT, on_shutdown_signal);
  std::signal(SIGTERM, on_shutdown_signal);
  std::jthread watcher([&api](std::stop_token st) {
    while (!st.stop_requested() && !g_shutdown) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    api.stop();
  });
  out << "serving " << service.bank().size() << " questions on http://" << opt.host << ":"
      << opt.port << " (data dir " << data_dir << ")" << std::endl;
  const bool ok = api.serve();
  watcher.request_stop();
  return ok || g_shutdown ? kExitOk : kExitRuntime;
}

int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  require_file(opt.bank, "--bank");
  const std::string log_path =
      !opt.log.empty() ? opt.log
                       : (fs::path(opt.data_dir.empty() ? default_data_dir() : opt.data_dir) /
                          "answers.jsonl")
                             .string();
  require_file(log_path, "--log");
  if (opt.metric != "exact" && opt.metric != "stem") {
    throw UsageError("--metric must be exact or stem");
  }
  const QuestionBank bank = load_bank(opt.bank);
  const std::vector<AnswerLogRecord> log = load_answer_log(log_path);
  if (log.empty()) throw Error("answer log is empty");
  const std::vector<QuestionStats> stats = aggregate(bank, log);

  if (!opt.out.empty()) {
    std::ofstream csv(opt.out, std::ios::binary);
    export_scatter(stats, csv);
    if (!csv) throw Error("cannot write " + opt.out);
  }
  const std::size_t answered = static_cast<std::size_t>(
      std::count_if(stats.begin(), stats.end(), [](const QuestionStats& s) { return s.n_answers > 0; }));
  const double r =
      correlate(stats, opt.metric == "exact" ? MatchMetric::kExact : MatchMetric::kStem);
  out << "questions\t" << answered << '\n';
  out << "metric\t" << opt.metric << '\n';
  out << "pearson_r\t" << std::setprecision(12) << r << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open cloze question generation, grading and quiz serving"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Generate and rank questions from a corpus");
  generate->add_option("--corpus", gen.corpus, "Corpus file or directory (repeatable)");
  generate->add_option("--format", gen.format, "auto, plaintext or jsonl")->capture_default_str();
  generate->add_option("--wordlist", gen.wordlist, "Allowed vocabulary, one word per line");
  generate->add_option("--targets", gen.targets, "Target words, one per line");
  generate->add_option("--backend", gen.backend, "tabular:<path> or remote:<url>")->required();
  generate->add_option("--model-name", gen.model_name, "Model label stored with each question");
  generate->add_option("--mask-token", gen.mask_token, "Mask token the backend expects")
      ->capture_default_str();
  generate->add_option("--mask-placeholder", gen.mask_placeholder)->capture_default_str();
  generate->add_option("--top-m", gen.top_m, "Candidates requested per sentence")
      ->capture_default_str();
  generate->add_option("--k", gen.k, "Top-k for reweighting")->capture_default_str();
  generate->add_option("--min-gap", gen.min_gap, "Gap score threshold")->capture_default_str();
  generate->add_option("--per-target-limit", gen.per_target_limit)->capture_default_str();
  generate->add_option("--min-tokens", gen.min_tokens)->capture_default_str();
  generate->add_option("--max-tokens", gen.max_tokens)->capture_default_str();
  generate->add_flag("--no-proper-noun-exemption", gen.no_proper_noun_exemption,
                     "Require capitalized tokens to be in the word list too");
  generate->add_flag("--keep-repeated-target", gen.keep_repeated_target,
                     "Keep sentences that contain the target more than once");
  generate->add_option("--sample", gen.sample, "Keep a random sample of N questions");
  generate->add_option("--seed", gen.seed, "Seed for --sample")->capture_default_str();
  generate->add_option("--out", gen.out, "Output bank (JSON lines)");
  generate->add_option("--report", gen.report, "Write the report here instead of stdout");
  generate->add_option("--created-at", gen.created_at, "Timestamp stored in questions");
  generate->add_option("--jobs", gen.jobs, "Concurrent backend requests")->capture_default_str();

  RankOptions rank_opt;
  auto* rank_cmd = app.add_subcommand("rank", "List bank questions by gap score");
  rank_cmd->add_option("--bank", rank_opt.bank)->required();
  rank_cmd->add_option("--top", rank_opt.top, "Show only the N best");

  GradeOptions grade_opt;
  auto* grade_cmd = app.add_subcommand("grade", "Grade one answer");
  grade_cmd->add_option("--truth", grade_opt.truth)->required();
  grade_cmd->add_option("--answer", grade_opt.answer)->required();

  ServeOptions serve_opt;
  auto* serve = app.add_subcommand("serve", "Run the quiz HTTP service");
  serve->add_option("--bank", serve_opt.bank)->required();
  serve->add_option("--data-dir", serve_opt.data_dir, "Defaults to $CLOZER_DATA_DIR");
  serve->add_option("--host", serve_opt.host)->capture_default_str();
  serve->add_option("--port", serve_opt.port)->capture_default_str();

  AnalyzeOptions analyze_opt;
  auto* analyze = app.add_subcommand("analyze", "Correlate gap scores with correct ratios");
  analyze->add_option("--bank", analyze_opt.bank)->required();
  analyze->add_option("--log", analyze_opt.log, "Answer log (default: <data dir>/answers.jsonl)");
  analyze->add_option("--data-dir", analyze_opt.data_dir);
  analyze->add_option("--out", analyze_opt.out, "Scatter CSV output");
  analyze->add_option("--metric", analyze_opt.metric, "exact or stem")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out, err);
    if (rank_cmd->parsed()) return cmd_rank(rank_opt, out);
    if (grade_cmd->parsed()) return cmd_grade(grade_opt, out);
    if (serve->parsed()) return cmd_serve(serve_opt, out, err);
    if (analyze->parsed()) return cmd_analyze(analyze_opt, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace clozer::cli
