#include "clozer/mlm_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "clozer/error.hpp"
#include "clozer/parallel.hpp"
#include "httplib.h"
#include "json.hpp"

namespace clozer {

using nlohmann::json;

void validate_prediction(const MaskPrediction& prediction) {
  const auto& cands = prediction.candidates;
  if (cands.empty()) throw ValidationError("prediction has no candidates");
  if (prediction.truncation_m != cands.size()) {
    throw ValidationError("truncation_m does not match the candidate count");
  }
  double total = 0.0;
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double c = cands[i].confidence;
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ValidationError("confidence must be positive (candidate '" +
                            cands[i].word + "')");
    }
    if (c > 1.0) {
      throw ValidationError("confidence exceeds 1 (candidate '" + cands[i].word +
                            "')");
    }
    if (i > 0 && c > cands[i - 1].confidence + kSortSlack) {
      throw ValidationError("candidates are not sorted in descending order");
    }
    if (cands[i].word.empty()) throw ValidationError("candidate word is empty");
    if (!seen.insert(cands[i].word).second) {
      throw ValidationError("duplicate candidate word '" + cands[i].word + "'");
    }
    total += c;
  }
  if (total > 1.0 + kConfidenceSumSlack) {
    throw ValidationError("confidences sum to more than 1");
  }
}

void BackendDescriptor::validate() const {
  if (top_m < 2) throw ValidationError("top_m must be at least 2");
  if (mask_token.empty()) throw ValidationError("mask token is empty");
  if (kind == BackendKind::kRemote && endpoint.empty()) {
    throw ValidationError("remote backend needs an endpoint URL");
  }
  if (max_in_flight < 1) throw ValidationError("max_in_flight must be positive");
  if (max_retries < 0) throw ValidationError("max_retries must be non-negative");
}

BackendDescriptor parse_backend_spec(std::string_view spec) {
  BackendDescriptor d;
  const std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos || colon + 1 == spec.size()) {
    throw ValidationError("backend must be tabular:<path> or remote:<url>");
  }
  const std::string_view kind = spec.substr(0, colon);
  d.endpoint = std::string(spec.substr(colon + 1));
  if (kind == "tabular") {
    d.kind = BackendKind::kTabular;
    d.model_name = "tabular:" + std::filesystem::path(d.endpoint).filename().string();
  } else if (kind == "remote") {
    d.kind = BackendKind::kRemote;
    d.model_name = "remote:" + d.endpoint;
  } else {
    throw ValidationError("unknown backend kind '" + std::string(kind) + "'");
  }
  return d;
}

// -- Tabular ----------------------------------------------------------------

TabularBackend::TabularBackend(BackendDescriptor descriptor,
                               std::unordered_map<std::string, MaskPrediction> rows)
    : descriptor_(std::move(descriptor)), rows_(std::move(rows)) {
  for (auto& [key, row] : rows_) {
    std::stable_sort(row.candidates.begin(), row.candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.confidence > b.confidence;
                     });
    row.truncation_m = row.candidates.size();
    try {
      validate_prediction(row);
    } catch (const ValidationError& e) {
      throw ValidationError("prediction row '" + key + "': " + e.what());
    }
  }
}

std::unordered_map<std::string, MaskPrediction> TabularBackend::parse_table(
    std::string_view contents, const std::string& origin) {
  std::unordered_map<std::string, MaskPrediction> rows;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object() || !row.contains("key") ||
        !row["key"].is_string() || !row.contains("candidates") ||
        !row["candidates"].is_array()) {
      throw ValidationError(where + ": expected {\"key\": string, \"candidates\": array}");
    }
    MaskPrediction pred;
    for (const json& pair : row["candidates"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
          !pair[1].is_number()) {
        throw ValidationError(where + ": candidate must be [token, confidence]");
      }
      pred.candidates.push_back({pair[0].get<std::string>(), pair[1].get<double>()});
    }
    pred.truncation_m = pred.candidates.size();
    const std::string key = row["key"].get<std::string>();
    if (!rows.emplace(key, std::move(pred)).second) {
      throw ValidationError(where + ": duplicate key '" + key + "'");
    }
  }
  return rows;
}

TabularBackend TabularBackend::load(BackendDescriptor descriptor) {
  std::ifstream in(descriptor.endpoint, std::ios::binary);
  if (!in) throw Error("cannot open prediction table " + descriptor.endpoint);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto rows = parse_table(buf.str(), descriptor.endpoint);
  return TabularBackend(std::move(descriptor), std::move(rows));
}

MaskPrediction TabularBackend::predict(const MaskedSentence& masked) const {
  auto it = rows_.find(masked.sentence_id);
  if (it == rows_.end()) {
    throw NotFoundError("no prediction row for sentence '" + masked.sentence_id + "'");
  }
  return it->second;
}

// -- Remote -----------------------------------------------------------------

struct RemoteBackend::Gate {
  explicit Gate(int n) : free(n) {}
  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return free > 0; });
    --free;
  }
  void release() {
    {
      std::lock_guard lock(mu);
      ++free;
    }
    cv.notify_one();
  }
  std::mutex mu;
  std::condition_variable cv;
  int free;
};

RemoteBackend::RemoteBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)),
      gate_(std::make_unique<Gate>(descriptor_.max_in_flight)) {
  descriptor_.validate();
  std::string url = descriptor_.endpoint;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const std::size_t scheme = url.find("://");
  const std::size_t path_at =
      url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_at == std::string::npos) {
    scheme_host_port_ = url;
  } else {
    scheme_host_port_ = url.substr(0, path_at);
    base_path_ = url.substr(path_at);
  }
}

RemoteBackend::~RemoteBackend() = default;

std::string RemoteBackend::post(const std::string& path,
                                const std::string& body) const {
  gate_->acquire();
  struct Release {
    Gate* g;
    ~Release() { g->release(); }
  } release{gate_.get()};

  std::string last_error;
  int backoff = descriptor_.backoff_ms;
  for (int attempt = 0; attempt <= descriptor_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(descriptor_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(base_path_ + path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("POST " + path + " returned HTTP " +
                           std::to_string(res->status));
    }
    return res->body;
  }
  throw TransportError("POST " + descriptor_.endpoint + path + " failed after " +
                       std::to_string(descriptor_.max_retries + 1) +
                       " attempts: " + last_error);
}

MaskPrediction RemoteBackend::parse_predict_response(std::string_view body,
                                                     int top_m) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("candidates") ||
      !doc["candidates"].is_array()) {
    throw TransportError("malformed /predict response: missing candidates array");
  }
  MaskPrediction pred;
  for (const json& item : doc["candidates"]) {
    if (!item.is_object() || !item.contains("token") || !item["token"].is_string() ||
        !item.contains("confidence") || !item["confidence"].is_number()) {
      throw TransportError(
          "malformed /predict response: candidate needs token and confidence");
    }
    if (static_cast<int>(pred.candidates.size()) == top_m) break;
    pred.candidates.push_back(
        {item["token"].get<std::string>(), item["confidence"].get<double>()});
  }
  pred.truncation_m = pred.candidates.size();
  validate_prediction(pred);
  return pred;
}

MaskPrediction RemoteBackend::predict(const MaskedSentence& masked) const {
  const json request = {{"masked_text", masked.masked_text},
                        {"mask_token", descriptor_.mask_token},
                        {"top_m", descriptor_.top_m}};
  return parse_predict_response(post("/predict", request.dump()), descriptor_.top_m);
}

bool RemoteBackend::in_vocab(std::string_view word) const {
  {
    std::lock_guard lock(vocab_mu_);
    if (auto it = vocab_cache_.find(word); it != vocab_cache_.end()) {
      return it->second;
    }
  }
  const json request = {{"word", std::string(word)}};
  json doc = json::parse(post("/vocab_check", request.dump()), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("in_vocab") ||
      !doc["in_vocab"].is_boolean()) {
    throw TransportError("malformed /vocab_check response");
  }
  const bool result = doc["in_vocab"].get<bool>();
  std::lock_guard lock(vocab_mu_);
  vocab_cache_.emplace(std::string(word), result);
  return result;
}

// -- Dispatch ---------------------------------------------------------------

std::unique_ptr<MaskPredictor> make_backend(const BackendDescriptor& descriptor) {
  descriptor.validate();
  if (descriptor.kind == BackendKind::kTabular) {
    return std::make_unique<TabularBackend>(TabularBackend::load(descriptor));
  }
  return std::make_unique<RemoteBackend>(descriptor);
}

MaskPrediction predict_mask(const MaskPredictor& backend,
                            const MaskedSentence& masked) {
  const std::string& token = backend.descriptor().mask_token;
  if (masked.placeholder.empty()) throw ValidationError("masked sentence has no placeholder");
  const std::size_t at = masked.masked_text.find(masked.placeholder);
  if (at == std::string::npos ||
      masked.masked_text.find(masked.placeholder, at + 1) != std::string::npos) {
    throw ValidationError("masked text must contain exactly one placeholder");
  }
  MaskedSentence dispatched = masked;
  dispatched.masked_text.replace(at, masked.placeholder.size(), token);
  dispatched.placeholder = token;
  MaskPrediction pred = backend.predict(dispatched);
  validate_prediction(pred);
  return pred;
}

std::vector<PredictOutcome> predict_batch(const MaskPredictor& backend,
                                          std::span<const MaskedSentence> items,
                                          int parallelism) {
  std::vector<PredictOutcome> out(items.size());
  parallel_for(items.size(), parallelism, [&](std::size_t i) {
    PredictOutcome& o = out[i];
    try {
      o.prediction = predict_mask(backend, items[i]);
    } catch (const NotFoundError& e) {
      o.error_kind = PredictErrorKind::kNotFound;
      o.error = e.what();
    } catch (const TransportError& e) {
      o.error_kind = PredictErrorKind::kTransport;
      o.error = e.what();
    } catch (const ValidationError& e) {
      o.error_kind = PredictErrorKind::kValidation;
      o.error = e.what();
    } catch (const std::exception& e) {
      o.error_kind = PredictErrorKind::kOther;
      o.error = e.what();
    }
  });
  return out;
}

}  // namespace clozer
