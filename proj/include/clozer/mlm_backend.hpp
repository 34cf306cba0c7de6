#ifndef CLOZER_MLM_BACKEND_HPP_
#define CLOZER_MLM_BACKEND_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clozer/text_corpus.hpp"

namespace clozer {

struct Candidate {
  std::string word;
  double confidence = 0.0;

  bool operator==(const Candidate&) const = default;
};

// Candidate words for one masked position, best first. Rank r (1-based) is
// candidates[r - 1].
struct MaskPrediction {
  std::vector<Candidate> candidates;
  std::size_t truncation_m = 0;

  bool operator==(const MaskPrediction&) const = default;
};

// Tolerances for validate_prediction().
inline constexpr double kConfidenceSumSlack = 1e-6;
inline constexpr double kSortSlack = 1e-9;

// Throws ValidationError naming the violated invariant: empty list,
// non-positive or >1 confidence, unsorted order, total above one, duplicate
// words, or truncation_m different from the list size.
void validate_prediction(const MaskPrediction& prediction);

enum class BackendKind { kTabular, kRemote };

struct BackendDescriptor {
  BackendKind kind = BackendKind::kTabular;
  // Table path for tabular backends, base URL for remote ones.
  std::string endpoint;
  std::string model_name = "tabular";
  std::string mask_token = "[MASK]";
  int top_m = 50;
  // Remote client settings.
  int max_in_flight = 8;
  int max_retries = 2;
  int timeout_ms = 10000;
  int backoff_ms = 100;

  void validate() const;
};

// Parses "tabular:<path>" or "remote:<url>".
BackendDescriptor parse_backend_spec(std::string_view spec);

// The masked-word predictor. Implementations are safe to call concurrently.
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  // The returned prediction always satisfies validate_prediction().
  virtual MaskPrediction predict(const MaskedSentence& masked) const = 0;

  // Whether `word` is a single entry of the model vocabulary.
  virtual bool in_vocab(std::string_view word) const = 0;
};

// Predictions looked up by sentence id from a JSON-lines table:
//   {"key": "<sentence id>", "candidates": [["peace", 0.8], ...]}
// Rows are re-sorted best first on load; nothing else is altered.
class TabularBackend : public MaskPredictor {
 public:
  TabularBackend(BackendDescriptor descriptor,
                 std::unordered_map<std::string, MaskPrediction> rows);

  static TabularBackend load(BackendDescriptor descriptor);
  static std::unordered_map<std::string, MaskPrediction> parse_table(
      std::string_view contents, const std::string& origin);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  MaskPrediction predict(const MaskedSentence& masked) const override;
  bool in_vocab(std::string_view) const override { return true; }

  std::size_t size() const { return rows_.size(); }

 private:
  BackendDescriptor descriptor_;
  std::unordered_map<std::string, MaskPrediction> rows_;
};

// HTTP client for an inference server speaking:
//   POST {endpoint}/predict     {"masked_text", "mask_token", "top_m"}
//                            -> {"candidates": [{"token", "confidence"}, ...]}
//   POST {endpoint}/vocab_check {"word"} -> {"in_vocab": bool}
// At most max_in_flight requests run at once; transport failures are retried
// max_retries times with doubling backoff. Responses are validated, never
// repaired.
class RemoteBackend : public MaskPredictor {
 public:
  explicit RemoteBackend(BackendDescriptor descriptor);
  ~RemoteBackend() override;

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  MaskPrediction predict(const MaskedSentence& masked) const override;
  bool in_vocab(std::string_view word) const override;

  // Converts a /predict response body into a validated prediction, keeping at
  // most top_m candidates.
  static MaskPrediction parse_predict_response(std::string_view body,
                                               int top_m);

 private:
  std::string post(const std::string& path, const std::string& body) const;

  struct Gate;
  BackendDescriptor descriptor_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::unique_ptr<Gate> gate_;
  mutable std::mutex vocab_mu_;
  mutable std::map<std::string, bool, std::less<>> vocab_cache_;
};

std::unique_ptr<MaskPredictor> make_backend(const BackendDescriptor& descriptor);

// Rewrites the placeholder to the backend's mask token and predicts. Throws
// NotFoundError (missing row), TransportError or ValidationError.
MaskPrediction predict_mask(const MaskPredictor& backend,
                            const MaskedSentence& masked);

enum class PredictErrorKind { kNone, kNotFound, kTransport, kValidation, kOther };

struct PredictOutcome {
  std::optional<MaskPrediction> prediction;
  PredictErrorKind error_kind = PredictErrorKind::kNone;
  std::string error;

  bool ok() const { return prediction.has_value(); }
};

// Element-wise predict_mask with up to `parallelism` concurrent calls. Output
// order matches input order; a failing item never aborts the others.
std::vector<PredictOutcome> predict_batch(const MaskPredictor& backend,
                                          std::span<const MaskedSentence> items,
                                          int parallelism = 1);

}  // namespace clozer

#endif  // CLOZER_MLM_BACKEND_HPP_
