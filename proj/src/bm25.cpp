#include "subtag/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace subtag {

std::size_t Bm25Index::add_document(const std::vector<std::string>& tokens) {
  const auto doc = static_cast<std::uint32_t>(doc_len_.size());
  doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
  total_len_ += tokens.size();
  std::unordered_map<std::string, std::uint32_t> tf;
  for (const auto& t : tokens) ++tf[t];
  for (const auto& [token, count] : tf) {
    postings_[token].emplace_back(doc, count);
  }
  return doc;
}

double Bm25Index::avgdl() const {
  return doc_len_.empty() ? 0.0 : static_cast<double>(total_len_) / static_cast<double>(doc_len_.size());
}

double Bm25Index::idf(std::size_t df) const {
  const double n = static_cast<double>(doc_len_.size());
  const double d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5));
}

std::vector<Bm25Index::Hit> Bm25Index::search(const std::vector<std::string>& query_tokens,
                                              std::size_t top_n) const {
  if (doc_len_.empty() || top_n == 0) return {};
  const double avg = avgdl();
  const std::set<std::string> distinct(query_tokens.begin(), query_tokens.end());

  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& token : distinct) {
    const auto it = postings_.find(token);
    if (it == postings_.end()) continue;
    const double w = idf(it->second.size());
    for (const auto& [doc, tf] : it->second) {
      const double len_norm = params_.k1 * (1.0 - params_.b + params_.b * doc_len_[doc] / avg);
      acc[doc] += w * (tf * (params_.k1 + 1.0)) / (tf + len_norm);
    }
  }

  std::vector<Hit> hits;
  hits.reserve(acc.size());
  for (const auto& [doc, score] : acc) hits.push_back({doc, score});
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc < b.doc;
  });
  if (hits.size() > top_n) hits.resize(top_n);
  return hits;
}

double Bm25Index::score(std::size_t doc, const std::vector<std::string>& query_tokens) const {
  if (doc >= doc_len_.size()) return 0.0;
  const double avg = avgdl();
  const std::set<std::string> distinct(query_tokens.begin(), query_tokens.end());
  double total = 0.0;
  for (const auto& token : distinct) {
    const auto it = postings_.find(token);
    if (it == postings_.end()) continue;
    const auto entry = std::find_if(it->second.begin(), it->second.end(),
                                    [&](const auto& p) { return p.first == doc; });
    if (entry == it->second.end()) continue;
    const double len_norm = params_.k1 * (1.0 - params_.b + params_.b * doc_len_[doc] / avg);
    total += idf(it->second.size()) * (entry->second * (params_.k1 + 1.0)) / (entry->second + len_norm);
  }
  return total;
}

}  // namespace subtag
