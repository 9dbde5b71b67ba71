#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subtag/corpus.hpp"
#include "subtag/gateway.hpp"
#include "subtag/prompting.hpp"
#include "subtag/vocab_index.hpp"
#include "subtag/vocabulary.hpp"

namespace subtag {

/// Final scored tuple for one (document, concept). s_fin is the convex
/// combination alpha * s_ens + (1 - alpha) * s_rel; ranks run 1..n per
/// document by s_fin descending.
struct ScoredSuggestion {
  std::string doc_id;
  std::string concept_id;
  double s_ens = 0.0;
  double s_rel = 0.0;
  double s_fin = 0.0;
  std::size_t rank = 0;
};

struct CombineConfig {
  double alpha = 0.3;
  double rank_default = 0.5;  // s_rel used when the rater reply is unscored
  std::optional<std::size_t> max_suggestions_per_doc;
  int rank_scale_max = 10;
};

struct EnsembleScore {
  std::string doc_id;
  std::string concept_id;
  double s_ens = 0.0;
};

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One ensemble member with its assembled few-shot prompt.
struct MemberPrompt {
  EnsembleMember member;
  Prompt prompt;
};

struct CompletionOutcome {
  std::vector<std::string> keywords;
  std::optional<std::string> error;  // set when generation failed for this pair
};

/// member_id -> doc_id -> outcome.
using CompleteResults = std::map<std::string, std::map<std::string, CompletionOutcome>>;

/// Receives each (member, doc) outcome as soon as it exists, so callers can
/// persist incrementally and survive interruption.
using CompleteSink = std::function<void(const std::string& member_id, const std::string& doc_id,
                                        const CompletionOutcome&)>;

/// Runs the keyword-generation stage for every member x document pair.
/// Failures are recorded per pair and never abort the batch. Pairs already
/// present in `resume` are skipped (and not re-emitted to the sink).
CompleteResults run_complete_stage(const std::vector<Record>& docs,
                                   const std::vector<MemberPrompt>& members, Gateway& gateway,
                                   const std::string& complete_template,
                                   const CompleteSink& sink = nullptr,
                                   const CompleteResults* resume = nullptr);

/// Aggregates mapped suggestions into per-(doc, concept) ensemble scores:
/// within each member the maximum similarity for the concept counts, the
/// per-member maxima are summed and divided by n_members. Throws when more
/// distinct members appear than n_members. Output sorted by (doc_id,
/// concept_id).
std::vector<EnsembleScore> summarise(const std::vector<MappedSuggestion>& mapped,
                                     std::size_t n_members);

using RelevanceLookup = std::map<std::pair<std::string, std::string>, double>;

/// Queries the rating model once per (doc, concept): s_rel is the 0-10 reply
/// over rank_scale_max, or cfg.rank_default when unscored. doc_text and
/// concept_label supply the rater's inputs.
RelevanceLookup rank_stage(const std::vector<EnsembleScore>& suggestions,
                           const std::function<std::string(const std::string&)>& doc_text,
                           const std::function<std::string(const std::string&)>& concept_label,
                           Gateway& gateway, const ModelConfig& rank_model,
                           const std::string& rank_template, const CombineConfig& cfg,
                           const RelevanceLookup* cached = nullptr);

/// Fills s_fin, sorts per document by (s_fin desc, s_ens desc, concept_id
/// asc), assigns ranks 1..n and truncates to max_suggestions_per_doc.
/// Returned flat list is ordered by (doc_id asc, rank asc).
std::vector<ScoredSuggestion> combine(std::vector<ScoredSuggestion> suggestions,
                                      const CombineConfig& cfg);

/// Reassigns ranks 1..n per document over an already doc-grouped, ordered
/// list (used after filtering drops rows).
void renumber_ranks(std::vector<ScoredSuggestion>& suggestions);

struct PipelineConfig {
  std::string complete_template;
  std::string rank_template;
  ModelConfig rank_model;
  double threshold = 0.6;
  double hybrid_weight = 0.75;
  CombineConfig combine;
};

struct PipelineResult {
  /// Every input document has an entry, empty when nothing survived.
  std::map<std::string, std::vector<ScoredSuggestion>> per_doc;
  std::vector<ScoredSuggestion> flat;  // (doc_id asc, rank asc)
};

/// complete -> map (against the extended vocabulary) -> summarise -> rank ->
/// combine -> filter to the target collection, in that order.
PipelineResult run_pipeline(const std::vector<Record>& docs,
                            const std::vector<MemberPrompt>& members, const Vocabulary& vocab,
                            const VocabularyIndex& index, const Embedder& embedder,
                            Gateway& gateway, const PipelineConfig& cfg);

}  // namespace subtag
