#ifndef CLOZER_TEXT_CORPUS_HPP_
#define CLOZER_TEXT_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace clozer {

// Where a sentence came from. For plaintext files `document` is the file id
// and `offset` the byte offset of the sentence in the file. For JSON-lines
// files `document` is "<file id>:<line>" and `offset` is relative to the
// record's "text" value.
struct SourceRef {
  std::string document;
  std::size_t offset = 0;

  bool operator==(const SourceRef&) const = default;
};

struct SentenceRecord {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  SourceRef source;

  bool operator==(const SentenceRecord&) const = default;
};

// Byte range [begin, end) of a token inside its sentence text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Word tokens are runs of ASCII letters, optionally joined by internal
// apostrophes ("don't", "o'clock"). Everything else separates tokens.
std::vector<TokenSpan> tokenize_spans(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Set of allowed lowercase words.
class WordList {
 public:
  WordList() = default;
  WordList(std::initializer_list<std::string_view> words);

  // One word per line; blank lines and '#' comments are skipped. Entries are
  // lowercased; entries containing whitespace are rejected.
  static WordList load(const std::filesystem::path& path);
  static WordList parse(std::string_view contents);

  void add(std::string_view word);
  bool contains(std::string_view lowercase_word) const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

 private:
  std::set<std::string, std::less<>> words_;
};

struct ExtractionConfig {
  int min_tokens = 8;
  int max_tokens = 30;
  // Empty list disables the vocabulary filter.
  WordList word_list;
  bool exempt_capitalized = true;
  bool drop_repeated_target = true;
  std::string mask_placeholder = "[MASK]";

  // Throws ValidationError unless 1 <= min_tokens <= max_tokens and the
  // placeholder is non-empty.
  void validate() const;
};

struct MaskedSentence {
  std::string sentence_id;
  std::string target_word;
  std::size_t target_token_index = 0;
  std::string masked_text;
  // Placeholder used in masked_text and the original surface form it hides.
  std::string placeholder;
  std::string surface;

  bool operator==(const MaskedSentence&) const = default;
};

// Puts the surface form back in place of the placeholder.
std::string unmask(const MaskedSentence& masked);

enum class CorpusFormat { kPlaintext, kJsonl };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

struct CorpusInput {
  std::filesystem::path path;
  // Identifier used in sentence ids and provenance. Empty means the file name.
  std::string document_id;
};

struct FileError {
  std::filesystem::path path;
  std::string message;
};

struct IngestResult {
  std::vector<SentenceRecord> sentences;
  std::vector<FileError> errors;
};

// Splits one document into sentences. Sentence boundaries are '.', '!' or
// '?' (plus any closing quotes or brackets) followed by whitespace and an
// uppercase letter, or by the end of the paragraph. Known abbreviations and
// single-letter initials never end a sentence. Paragraphs (blank-line
// separated) always end a sentence. Sentences without word tokens are
// dropped. Ids are "<document>#<n>" with n counting from 0.
std::vector<SentenceRecord> segment_document(std::string_view text,
                                             const std::string& document_id);

// Reads and segments every input. A file that cannot be read or is not valid
// UTF-8 contributes an entry to `errors` and no sentences; the remaining
// files are still ingested.
IngestResult ingest_corpus(const std::vector<CorpusInput>& inputs,
                           CorpusFormat format);
IngestResult ingest_corpus(const std::vector<std::filesystem::path>& paths,
                           CorpusFormat format);

bool is_valid_utf8(std::string_view bytes);

// Records whose tokens contain `target` as a whole token (case-insensitive),
// in input order.
std::vector<SentenceRecord> extract_target_sentences(
    const std::vector<SentenceRecord>& corpus, std::string_view target);

std::size_t count_occurrences(const SentenceRecord& record,
                              std::string_view target);

// Length, vocabulary and repeated-target filters.
bool passes_filter(const SentenceRecord& record, std::string_view target,
                   const ExtractionConfig& cfg);
std::vector<SentenceRecord> filter_sentences(
    const std::vector<SentenceRecord>& candidates, std::string_view target,
    const ExtractionConfig& cfg);

// Replaces the `occurrence`-th whole-token match of `target` with
// `placeholder`. Throws std::out_of_range when there is no such match.
MaskedSentence mask_sentence(const SentenceRecord& record,
                             std::string_view target, std::size_t occurrence,
                             std::string_view placeholder = "[MASK]");

}  // namespace clozer

#endif  // CLOZER_TEXT_CORPUS_HPP_
