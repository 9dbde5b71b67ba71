#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subtag/evaluation.hpp"
#include "subtag/gateway.hpp"
#include "subtag/pipeline.hpp"
#include "subtag/vocabulary.hpp"

namespace subtag {

class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A candidate ensemble: sorted member ids plus the PR-AUC it achieved on
/// the evaluation split.
struct MemberSubset {
  std::vector<std::string> member_ids;
  double objective = 0.0;
};

/// Everything a subset evaluation needs, precomputed once: the full run's
/// mapped suggestions and the per-(doc, concept) relevance scores. Subset
/// search never calls a model.
struct EvalCache {
  std::vector<MappedSuggestion> mapped;
  RelevanceLookup relevance;
};

struct SubsetEvalConfig {
  CombineConfig combine;
  const Vocabulary* vocabulary = nullptr;  // when set, output is filtered to the target collection
};

/// Reruns summarise (divisor = subset size) + cached relevance + combine for
/// just the given members and returns the PR-AUC. Throws on a missing
/// relevance cache entry.
double evaluate_subset(const std::vector<std::string>& member_ids, const EvalCache& cache,
                       const GoldMap& gold, const SubsetEvalConfig& cfg);

using Objective = std::function<double(const std::vector<std::string>&)>;

/// Samples `budget` uniform random subsets with sizes uniform in size_range
/// and returns the best by objective (first-seen wins ties). When the whole
/// subset space within size_range fits into the budget it is enumerated
/// instead, making the result the exact optimum.
MemberSubset monte_carlo_search(const std::vector<std::string>& members, std::size_t budget,
                                std::pair<std::size_t, std::size_t> size_range, std::uint64_t seed,
                                const Objective& objective);

struct PruneStep {
  std::string removed;
  double objective;  // objective of the subset after this removal
};

struct PruneResult {
  MemberSubset subset;
  std::vector<PruneStep> trace;
};

/// Greedy backward elimination. Each round scores every single-member
/// removal and applies the best one (ties toward the smaller member_id)
/// while the subset is larger than target_size; at or below target_size a
/// removal is only accepted when the objective does not drop by more than
/// epsilon. Stops when no removal passes or one member remains.
/// start.objective is ignored; the baseline is re-evaluated.
PruneResult chain_prune(const MemberSubset& start, std::size_t target_size, double epsilon,
                        const Objective& objective);

enum class Strategy { top_k, one_model_all_prompts, one_prompt_all_models, one_model_one_prompt };

Strategy parse_strategy(std::string_view s);

struct StrategySelector {
  std::string model_id;                // one_model_* strategies
  std::string prompt_id;               // one_prompt_* / one_model_one_prompt
  std::size_t k = 0;                   // top_k
  std::vector<std::string> ranking;    // top_k: member ids in preference order
};

/// Materializes the member subset a baseline strategy denotes. The objective
/// (when provided) fills MemberSubset::objective.
MemberSubset build_strategy_subset(const std::vector<EnsembleMember>& members, Strategy strategy,
                                   const StrategySelector& selector,
                                   const Objective& objective = nullptr);

}  // namespace subtag
