#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace subtag {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 over short label documents.
///
///   score(D, Q) = sum over distinct query terms q of
///     ln((N - df + 0.5) / (df + 0.5)) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |D| / avgdl))
///
/// The classic idf, so scores can go negative when a term occurs in more
/// than half the documents.
class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  /// Documents are identified by insertion order, starting at 0.
  std::size_t add_document(const std::vector<std::string>& tokens);

  struct Hit {
    std::size_t doc;
    double score;
  };

  /// Scores every document sharing at least one token with the query and
  /// returns the top_n by (score desc, doc asc).
  std::vector<Hit> search(const std::vector<std::string>& query_tokens, std::size_t top_n) const;

  /// Direct score of one document, 0 when no query token matches.
  double score(std::size_t doc, const std::vector<std::string>& query_tokens) const;

  std::size_t size() const { return doc_len_.size(); }
  const Bm25Params& params() const { return params_; }

 private:
  double avgdl() const;
  double idf(std::size_t df) const;

  Bm25Params params_;
  std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings_;
  std::vector<std::uint32_t> doc_len_;
  std::uint64_t total_len_ = 0;
};

}  // namespace subtag
