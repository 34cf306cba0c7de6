#include "clozer/text_corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "clozer/error.hpp"
#include "json.hpp"

namespace clozer {
namespace {

bool is_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// Lowercase forms, without the trailing period.
constexpr std::array<std::string_view, 34> kAbbreviations = {
    "mr",   "mrs",  "ms",   "dr",   "st",   "prof", "sr",   "jr",   "mt",
    "vs",   "etc",  "e.g",  "i.e",  "jan",  "feb",  "mar",  "apr",  "jun",
    "jul",  "aug",  "sep",  "sept", "oct",  "nov",  "dec",  "gen",  "sen",
    "rep",  "gov",  "capt", "lt",   "col",  "sgt",  "fig"};

bool is_abbreviation(std::string_view word) {
  if (word.size() == 1 && is_letter(word[0])) return true;  // initials
  const std::string lower = to_lower(word);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower) !=
         kAbbreviations.end();
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// Is the period at `dot` the end of an abbreviation such as "Dr." or "e.g."?
bool ends_abbreviation(std::string_view para, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && (is_letter(para[begin - 1]) || para[begin - 1] == '.')) {
    --begin;
  }
  if (begin == dot) return false;
  return is_abbreviation(para.substr(begin, dot - begin));
}

struct Paragraph {
  std::size_t offset;
  std::string_view text;
};

std::vector<Paragraph> split_paragraphs(std::string_view text) {
  std::vector<Paragraph> out;
  std::size_t pos = 0;
  std::size_t para_begin = std::string_view::npos;
  std::size_t para_end = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    const bool blank =
        std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); });
    if (blank) {
      if (para_begin != std::string_view::npos) {
        out.push_back({para_begin, text.substr(para_begin, para_end - para_begin)});
        para_begin = std::string_view::npos;
      }
    } else {
      if (para_begin == std::string_view::npos) para_begin = pos;
      para_end = eol;
    }
    pos = eol + 1;
  }
  if (para_begin != std::string_view::npos) {
    out.push_back({para_begin, text.substr(para_begin, para_end - para_begin)});
  }
  return out;
}

// Returns [begin, end) ranges of sentences inside one paragraph.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(
    std::string_view para) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < para.size()) {
    if (!is_terminator(para[i])) {
      ++i;
      continue;
    }
    const std::size_t first_term = i;
    std::size_t e = i;
    while (e < para.size() && is_terminator(para[e])) ++e;
    const bool single_period = para[first_term] == '.' && e == first_term + 1;
    while (e < para.size() && is_closer(para[e])) ++e;
    std::size_t next = e;
    while (next < para.size() && is_space(para[next])) ++next;

    bool boundary = false;
    if (next == para.size()) {
      boundary = true;
    } else if (next > e) {
      std::size_t probe = next;
      while (probe < para.size() && is_opener(para[probe])) ++probe;
      boundary = probe < para.size() && is_upper(para[probe]);
    }
    if (boundary && next < para.size() && single_period &&
        ends_abbreviation(para, first_term)) {
      boundary = false;
    }
    if (boundary) {
      out.emplace_back(start, e);
      start = next;
    }
    i = e;
  }
  if (start < para.size()) out.emplace_back(start, para.size());
  return out;
}

std::string default_document_id(const std::filesystem::path& path) {
  return path.filename().string();
}

std::optional<std::string> read_file(const std::filesystem::path& path,
                                     std::string* error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    *error = "cannot open file";
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    *error = "read error";
    return std::nullopt;
  }
  return std::move(buf).str();
}

void append_sentences(std::vector<SentenceRecord>& out,
                      std::vector<SentenceRecord> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()),
             std::make_move_iterator(more.end()));
}

}  // namespace

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_letter(text[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < text.size()) {
      if (is_letter(text[i])) {
        ++i;
      } else if (text[i] == '\'' && i + 1 < text.size() &&
                 is_letter(text[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    spans.push_back({begin, i});
  }
  return spans;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  for (const TokenSpan& span : tokenize_spans(text)) {
    tokens.emplace_back(text.substr(span.begin, span.end - span.begin));
  }
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (is_upper(c)) c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

// -- WordList ---------------------------------------------------------------

WordList::WordList(std::initializer_list<std::string_view> words) {
  for (std::string_view w : words) add(w);
}

void WordList::add(std::string_view word) {
  if (word.empty()) throw ValidationError("word list entry is empty");
  if (std::any_of(word.begin(), word.end(), [](char c) { return is_space(c); })) {
    throw ValidationError("word list entry contains whitespace: '" +
                          std::string(word) + "'");
  }
  words_.insert(to_lower(word));
}

bool WordList::contains(std::string_view lowercase_word) const {
  return words_.find(lowercase_word) != words_.end();
}

WordList WordList::parse(std::string_view contents) {
  WordList list;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    std::size_t eol = contents.find('\n', pos);
    if (eol == std::string_view::npos) eol = contents.size();
    std::string_view line = contents.substr(pos, eol - pos);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') list.add(line);
    pos = eol + 1;
  }
  return list;
}

WordList WordList::load(const std::filesystem::path& path) {
  std::string error;
  auto contents = read_file(path, &error);
  if (!contents) {
    throw Error("word list " + path.string() + ": " + error);
  }
  if (!is_valid_utf8(*contents)) {
    throw ValidationError("word list " + path.string() + ": invalid UTF-8");
  }
  return parse(*contents);
}

void ExtractionConfig::validate() const {
  if (min_tokens < 1 || min_tokens > max_tokens) {
    throw ValidationError("token bounds must satisfy 1 <= min_tokens <= max_tokens");
  }
  if (mask_placeholder.empty()) {
    throw ValidationError("mask placeholder is empty");
  }
}

// -- Masking ----------------------------------------------------------------

std::string unmask(const MaskedSentence& masked) {
  std::string out = masked.masked_text;
  const std::size_t at = out.find(masked.placeholder);
  if (at == std::string::npos) {
    throw ValidationError("masked text has no placeholder");
  }
  out.replace(at, masked.placeholder.size(), masked.surface);
  return out;
}

MaskedSentence mask_sentence(const SentenceRecord& record,
                             std::string_view target, std::size_t occurrence,
                             std::string_view placeholder) {
  std::size_t seen = 0;
  const auto spans = tokenize_spans(record.text);
  for (std::size_t t = 0; t < spans.size(); ++t) {
    const TokenSpan& span = spans[t];
    const std::string_view token =
        std::string_view(record.text).substr(span.begin, span.end - span.begin);
    if (!iequals(token, target)) continue;
    if (seen++ != occurrence) continue;
    MaskedSentence m;
    m.sentence_id = record.id;
    m.target_word = to_lower(target);
    m.target_token_index = t;
    m.placeholder = std::string(placeholder);
    m.surface = std::string(token);
    m.masked_text = record.text.substr(0, span.begin) + m.placeholder +
                    record.text.substr(span.end);
    return m;
  }
  throw std::out_of_range("occurrence " + std::to_string(occurrence) + " of '" +
                          std::string(target) + "' not found in sentence " +
                          record.id);
}

// -- Ingestion --------------------------------------------------------------

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  if (name == "plaintext" || name == "text" || name == "txt") {
    return CorpusFormat::kPlaintext;
  }
  if (name == "jsonl") return CorpusFormat::kJsonl;
  return std::nullopt;
}

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= bytes.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<SentenceRecord> segment_document(std::string_view text,
                                             const std::string& document_id) {
  std::vector<SentenceRecord> out;
  for (const Paragraph& para : split_paragraphs(text)) {
    for (const auto& [begin, end] : split_sentences(para.text)) {
      SentenceRecord rec;
      rec.text = collapse_whitespace(para.text.substr(begin, end - begin));
      rec.tokens = tokenize(rec.text);
      if (rec.tokens.empty()) continue;
      rec.id = document_id + "#" + std::to_string(out.size());
      rec.source = {document_id, para.offset + begin};
      out.push_back(std::move(rec));
    }
  }
  return out;
}

IngestResult ingest_corpus(const std::vector<CorpusInput>& inputs,
                           CorpusFormat format) {
  IngestResult result;
  for (const CorpusInput& input : inputs) {
    const std::string doc = input.document_id.empty()
                                ? default_document_id(input.path)
                                : input.document_id;
    std::string error;
    auto contents = read_file(input.path, &error);
    if (!contents) {
      result.errors.push_back({input.path, error});
      continue;
    }
    if (!is_valid_utf8(*contents)) {
      result.errors.push_back({input.path, "invalid UTF-8 in " + input.path.string()});
      continue;
    }
    if (format == CorpusFormat::kPlaintext) {
      append_sentences(result.sentences, segment_document(*contents, doc));
      continue;
    }
    std::istringstream lines(*contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); })) {
        continue;
      }
      nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object() || !obj.contains("text") ||
          !obj["text"].is_string()) {
        result.errors.push_back(
            {input.path, "line " + std::to_string(line_no) +
                             ": expected an object with a string \"text\" field"});
        continue;
      }
      const std::string record_doc = doc + ":" + std::to_string(line_no);
      append_sentences(result.sentences,
                       segment_document(obj["text"].get<std::string>(), record_doc));
    }
  }
  return result;
}

IngestResult ingest_corpus(const std::vector<std::filesystem::path>& paths,
                           CorpusFormat format) {
  std::vector<CorpusInput> inputs;
  inputs.reserve(paths.size());
  for (const auto& p : paths) inputs.push_back({p, {}});
  return ingest_corpus(inputs, format);
}

// -- Extraction and filtering -------------------------------------------------

std::size_t count_occurrences(const SentenceRecord& record,
                              std::string_view target) {
  return static_cast<std::size_t>(
      std::count_if(record.tokens.begin(), record.tokens.end(),
                    [&](const std::string& tok) { return iequals(tok, target); }));
}

std::vector<SentenceRecord> extract_target_sentences(
    const std::vector<SentenceRecord>& corpus, std::string_view target) {
  std::vector<SentenceRecord> out;
  for (const SentenceRecord& rec : corpus) {
    if (count_occurrences(rec, target) > 0) out.push_back(rec);
  }
  return out;
}

bool passes_filter(const SentenceRecord& record, std::string_view target,
                   const ExtractionConfig& cfg) {
  const auto n = static_cast<int>(record.tokens.size());
  if (n < cfg.min_tokens || n > cfg.max_tokens) return false;
  if (!cfg.word_list.empty()) {
    for (std::size_t i = 0; i < record.tokens.size(); ++i) {
      const std::string& tok = record.tokens[i];
      if (cfg.exempt_capitalized && i > 0 && is_upper(tok.front())) continue;
      if (!cfg.word_list.contains(to_lower(tok))) return false;
    }
  }
  if (cfg.drop_repeated_target && count_occurrences(record, target) != 1) {
    return false;
  }
  return true;
}

std::vector<SentenceRecord> filter_sentences(
    const std::vector<SentenceRecord>& candidates, std::string_view target,
    const ExtractionConfig& cfg) {
  std::vector<SentenceRecord> out;
  for (const SentenceRecord& rec : candidates) {
    if (passes_filter(rec, target, cfg)) out.push_back(rec);
  }
  return out;
}

}  // namespace clozer
