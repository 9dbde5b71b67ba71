#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subtag/bm25.hpp"
#include "subtag/embedder.hpp"
#include "subtag/hnsw.hpp"
#include "subtag/vocabulary.hpp"

namespace subtag {

struct MappingParams {
  double hybrid_weight = 0.75;  // w: vector branch share of the fused score
  double threshold = 0.6;       // minimum cosine for a mapping to survive
  HnswParams hnsw;
  Bm25Params bm25;
};

/// One free keyword resolved onto a vocabulary concept. similarity is the
/// raw cosine clamped to [0,1] (not the fused score): the summarise stage
/// divides a similarity sum by the member count and needs the [0,1] bound.
struct MappedSuggestion {
  std::string doc_id;
  std::string keyword;
  std::string concept_id;
  double similarity = 0.0;
  std::string member_id;
};

struct KeywordItem {
  std::string doc_id;
  std::string keyword;
  std::string member_id;
};

/// Every concept label (preferred + alternative) embedded and indexed twice:
/// in an HNSW graph for dense search and in a BM25 index for lexical search.
/// Read-only after build; concurrent queries are fine.
class VocabularyIndex {
 public:
  struct Entry {
    std::string label;
    std::string concept_id;
  };

  struct Candidate {
    std::string concept_id;
    double fused = 0.0;
    double cosine = 0.0;  // raw, unclamped
  };

  static VocabularyIndex build(const Vocabulary& vocab, const Embedder& embedder,
                               MappingParams params);

  /// Takes 4*top_n candidates from each branch, min-max normalizes each
  /// branch over its own pool, fuses with w*vec + (1-w)*bm25 (a score
  /// missing from a branch counts 0), dedupes labels to concepts keeping the
  /// max fused score, and returns top_n by (fused desc, concept_id asc).
  std::vector<Candidate> hybrid_search(const Eigen::Ref<const Eigen::VectorXf>& query_vector,
                                       const std::string& query_text, double w,
                                       std::size_t top_n) const;

  /// Branch pools as used by hybrid_search, exposed so the degenerate w=1 /
  /// w=0 orderings can be checked against pure single-branch search.
  std::vector<std::pair<std::size_t, double>> vector_pool(
      const Eigen::Ref<const Eigen::VectorXf>& query_vector, std::size_t n) const;
  std::vector<std::pair<std::size_t, double>> bm25_pool(const std::string& query_text,
                                                        std::size_t n) const;

  const std::vector<Entry>& entries() const { return entries_; }
  const MappingParams& params() const { return params_; }
  int dimension() const { return hnsw_.dim(); }
  void set_ef_search(int ef) { hnsw_.set_ef_search(ef); }

  void save(const std::filesystem::path& path) const;
  static VocabularyIndex load(const std::filesystem::path& path);

 private:
  VocabularyIndex(MappingParams params, int dim) : params_(params), hnsw_(dim, params.hnsw) {}

  void index_label(std::string label, std::string concept_id, const Eigen::VectorXf& vec);

  MappingParams params_;
  std::vector<Entry> entries_;
  HnswIndex hnsw_;
  Bm25Index bm25_;
};

/// Maps each keyword to its top-1 hybrid hit; drops hits whose clamped
/// cosine falls below threshold and skips keywords that are empty after
/// trimming. Equal keywords are embedded once per call.
std::vector<MappedSuggestion> map_keywords(const VocabularyIndex& index, const Embedder& embedder,
                                           const std::vector<KeywordItem>& keywords,
                                           double threshold, double w);

}  // namespace subtag
