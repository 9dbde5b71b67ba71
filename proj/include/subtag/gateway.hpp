#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace subtag {

/// One completion backend. endpoint is either an HTTP base URL (a JSON
/// completions server) or the literal "mock" for the offline deterministic
/// backend.
struct ModelConfig {
  std::string model_id;
  std::string endpoint = "mock";
  double temperature = 0.0;
  int min_tokens = 24;
  int max_tokens = 100;
  std::chrono::milliseconds request_timeout{30000};
  int max_retries = 3;
  int max_in_flight = 4;
  std::chrono::milliseconds retry_backoff{250};
};

/// One model x prompt generation configuration.
struct EnsembleMember {
  std::string member_id;
  ModelConfig model;
  std::string prompt_spec_id;

  static EnsembleMember make(ModelConfig model, std::string prompt_spec_id) {
    EnsembleMember m;
    m.member_id = model.model_id + "×" + prompt_spec_id;
    m.model = std::move(model);
    m.prompt_spec_id = std::move(prompt_spec_id);
    return m;
  }
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits a raw completion into clean keywords: separators are commas,
/// semicolons and newlines; list markers ("-", "*", "1.") are stripped;
/// duplicates are dropped case-insensitively keeping the first occurrence;
/// anything over 120 bytes is truncated at a UTF-8 boundary.
std::vector<std::string> parse_keywords(std::string_view completion);

/// First integer token of a rank reply, clamped to [0, 10]; nullopt when the
/// reply carries no digits.
std::optional<int> parse_rank_reply(std::string_view reply);

/// Offline stand-in generator: emits a comma-joined list of the query's
/// longest unique alphabetic tokens (ties broken lexicographically); the list
/// length, 3-8, comes from a hash of (seed, prompt, query). Fully
/// deterministic, so pipelines built on it are bit-reproducible.
std::string mock_generate(const std::string& prompt, const std::string& query_text,
                          std::uint64_t seed);

/// Offline relevance rater: 10 times the fraction of the keyword's tokens
/// present in the text, rounded. Informative on fixtures whose gold labels
/// occur verbatim in the text.
int mock_rank(const std::string& text, const std::string& keyword);

/// Executes completion and relevance-rating requests. HTTP endpoints speak a
/// JSON completions protocol (POST /v1/completions with model, prompt,
/// temperature, min_tokens, max_tokens; reply has choices[0].text or a plain
/// text field). Transient failures are retried with exponential backoff up
/// to max_retries attempts; concurrent calls per model are capped at
/// max_in_flight. Safe for concurrent use.
class Gateway {
 public:
  explicit Gateway(std::uint64_t seed = 0) : seed_(seed) {}

  /// query_text feeds the mock backend (it generates from the query, not the
  /// full prompt); HTTP backends ignore it.
  std::string generate_completion(const ModelConfig& cfg, const std::string& prompt,
                                  const std::string& query_text = {});

  /// Renders rank_template ({text}, {keyword} slots), queries once (plus
  /// retries) and parses the first integer of the reply, clamped to [0, 10].
  /// nullopt = unscored; callers substitute their default.
  std::optional<int> rank_relevance(const ModelConfig& cfg, const std::string& text,
                                    const std::string& subject_label,
                                    const std::string& rank_template);

  std::uint64_t completions_requested() const { return completions_requested_.load(); }
  std::uint64_t ranks_requested() const { return ranks_requested_.load(); }

 private:
  class InFlightSlot;
  struct Limiter {
    std::mutex mu;
    std::condition_variable cv;
    int in_flight = 0;
  };

  std::shared_ptr<Limiter> limiter_for(const std::string& model_id);
  std::string http_completion(const ModelConfig& cfg, const std::string& prompt);

  std::uint64_t seed_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Limiter>> limiters_;
  std::atomic<std::uint64_t> completions_requested_{0};
  std::atomic<std::uint64_t> ranks_requested_{0};
};

}  // namespace subtag
