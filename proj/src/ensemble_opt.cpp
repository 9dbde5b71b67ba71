#include "subtag/ensemble_opt.hpp"

#include <algorithm>
#include <set>

#include "subtag/text.hpp"

namespace subtag {

double evaluate_subset(const std::vector<std::string>& member_ids, const EvalCache& cache,
                       const GoldMap& gold, const SubsetEvalConfig& cfg) {
  if (member_ids.empty()) throw OptimizerError("cannot evaluate an empty subset");
  const std::set<std::string> subset(member_ids.begin(), member_ids.end());

  std::vector<MappedSuggestion> restricted;
  for (const auto& m : cache.mapped) {
    if (subset.count(m.member_id) > 0) restricted.push_back(m);
  }
  const auto ensemble = summarise(restricted, subset.size());

  std::vector<ScoredSuggestion> staged;
  staged.reserve(ensemble.size());
  for (const auto& e : ensemble) {
    const auto it = cache.relevance.find({e.doc_id, e.concept_id});
    if (it == cache.relevance.end()) {
      throw OptimizerError("missing relevance cache entry for (" + e.doc_id + ", " + e.concept_id +
                           ")");
    }
    ScoredSuggestion s;
    s.doc_id = e.doc_id;
    s.concept_id = e.concept_id;
    s.s_ens = e.s_ens;
    s.s_rel = it->second;
    staged.push_back(std::move(s));
  }
  auto combined = combine(std::move(staged), cfg.combine);
  if (cfg.vocabulary != nullptr) {
    combined = filter_to_target(combined, *cfg.vocabulary);
  }
  return pr_auc(pr_curve(combined, gold));
}

namespace {

/// Number of subsets of an n-element set with sizes in [lo, hi], capped so
/// the caller can compare against a budget without overflow.
std::size_t count_subsets_capped(std::size_t n, std::size_t lo, std::size_t hi, std::size_t cap) {
  std::size_t total = 0;
  for (std::size_t s = lo; s <= hi && s <= n; ++s) {
    // C(n, s) incrementally, capped.
    std::size_t c = 1;
    bool overflow = false;
    for (std::size_t i = 0; i < s; ++i) {
      if (c > cap) {
        overflow = true;
        break;
      }
      c = c * (n - i) / (i + 1);
    }
    if (overflow || c > cap - total) return cap + 1;
    total += c;
  }
  return total;
}

void enumerate_subsets(std::size_t n, std::size_t lo, std::size_t hi,
                       const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> chosen;
  const std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t size) {
    if (chosen.size() == size) {
      visit(chosen);
      return;
    }
    for (std::size_t i = start; i + (size - chosen.size()) <= n; ++i) {
      chosen.push_back(i);
      rec(i + 1, size);
      chosen.pop_back();
    }
  };
  for (std::size_t s = std::max<std::size_t>(lo, 1); s <= hi && s <= n; ++s) {
    rec(0, s);
  }
}

}  // namespace

MemberSubset monte_carlo_search(const std::vector<std::string>& members, std::size_t budget,
                                std::pair<std::size_t, std::size_t> size_range, std::uint64_t seed,
                                const Objective& objective) {
  if (members.empty()) throw OptimizerError("no members to search over");
  if (budget == 0) throw OptimizerError("budget must be >= 1");
  const std::size_t lo = std::max<std::size_t>(1, size_range.first);
  const std::size_t hi = std::min(size_range.second, members.size());
  if (lo > hi) throw OptimizerError("size_range is empty for this member count");

  std::optional<MemberSubset> best;
  const auto consider = [&](std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    const double score = objective(ids);
    if (!best || score > best->objective) {
      best = MemberSubset{std::move(ids), score};
    }
  };

  if (count_subsets_capped(members.size(), lo, hi, budget) <= budget) {
    enumerate_subsets(members.size(), lo, hi, [&](const std::vector<std::size_t>& chosen) {
      std::vector<std::string> ids;
      ids.reserve(chosen.size());
      for (const auto i : chosen) ids.push_back(members[i]);
      consider(std::move(ids));
    });
    return *best;
  }

  DeterministicRng rng(splitmix64(seed));
  std::vector<std::size_t> pool(members.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  for (std::size_t draw = 0; draw < budget; ++draw) {
    const std::size_t size = lo + static_cast<std::size_t>(rng.next_below(hi - lo + 1));
    // Partial Fisher-Yates: the first `size` slots become the sample.
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::string> ids;
    ids.reserve(size);
    for (std::size_t i = 0; i < size; ++i) ids.push_back(members[pool[i]]);
    consider(std::move(ids));
  }
  return *best;
}

PruneResult chain_prune(const MemberSubset& start, std::size_t target_size, double epsilon,
                        const Objective& objective) {
  if (start.member_ids.empty()) throw OptimizerError("cannot prune an empty subset");
  if (target_size < 1) throw OptimizerError("target_size must be >= 1");
  if (target_size > start.member_ids.size()) {
    throw OptimizerError("target_size exceeds the starting subset size");
  }
  if (epsilon < 0.0) throw OptimizerError("epsilon must be >= 0");

  PruneResult result;
  std::vector<std::string> current = start.member_ids;
  std::sort(current.begin(), current.end());
  double current_objective = objective(current);

  while (current.size() > 1) {
    std::optional<std::size_t> best_idx;
    double best_objective = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      std::vector<std::string> without;
      without.reserve(current.size() - 1);
      for (std::size_t j = 0; j < current.size(); ++j) {
        if (j != i) without.push_back(current[j]);
      }
      const double score = objective(without);
      // Ties toward the smaller member_id; `current` is sorted, so the first
      // strictly-better index wins.
      if (!best_idx || score > best_objective) {
        best_idx = i;
        best_objective = score;
      }
    }
    const bool forced = current.size() > target_size;
    if (!forced && best_objective < current_objective - epsilon) break;
    result.trace.push_back({current[*best_idx], best_objective});
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(*best_idx));
    current_objective = best_objective;
    if (current.size() == 1) break;
  }

  result.subset = MemberSubset{std::move(current), current_objective};
  return result;
}

Strategy parse_strategy(std::string_view s) {
  if (s == "top_k" || s == "top-k") return Strategy::top_k;
  if (s == "one_model_all_prompts" || s == "one-model-all-prompts") {
    return Strategy::one_model_all_prompts;
  }
  if (s == "one_prompt_all_models" || s == "one-prompt-all-models") {
    return Strategy::one_prompt_all_models;
  }
  if (s == "one_model_one_prompt" || s == "one-model-one-prompt" || s == "one-prompt-one-model") {
    return Strategy::one_model_one_prompt;
  }
  throw OptimizerError("unknown strategy: '" + std::string(s) + "'");
}

MemberSubset build_strategy_subset(const std::vector<EnsembleMember>& members, Strategy strategy,
                                   const StrategySelector& selector, const Objective& objective) {
  std::vector<std::string> ids;
  switch (strategy) {
    case Strategy::top_k: {
      if (selector.k == 0) throw OptimizerError("top_k strategy requires k >= 1");
      if (selector.ranking.size() < selector.k) {
        throw OptimizerError("top_k strategy needs a ranking of at least k member ids");
      }
      ids.assign(selector.ranking.begin(),
                 selector.ranking.begin() + static_cast<std::ptrdiff_t>(selector.k));
      break;
    }
    case Strategy::one_model_all_prompts: {
      for (const auto& m : members) {
        if (m.model.model_id == selector.model_id) ids.push_back(m.member_id);
      }
      if (ids.empty()) throw OptimizerError("no members with model '" + selector.model_id + "'");
      break;
    }
    case Strategy::one_prompt_all_models: {
      for (const auto& m : members) {
        if (m.prompt_spec_id == selector.prompt_id) ids.push_back(m.member_id);
      }
      if (ids.empty()) throw OptimizerError("no members with prompt '" + selector.prompt_id + "'");
      break;
    }
    case Strategy::one_model_one_prompt: {
      for (const auto& m : members) {
        if (m.model.model_id == selector.model_id && m.prompt_spec_id == selector.prompt_id) {
          ids.push_back(m.member_id);
        }
      }
      if (ids.empty()) {
        throw OptimizerError("no member for model '" + selector.model_id + "' and prompt '" +
                             selector.prompt_id + "'");
      }
      break;
    }
  }
  std::sort(ids.begin(), ids.end());
  MemberSubset subset{std::move(ids), 0.0};
  if (objective) subset.objective = objective(subset.member_ids);
  return subset;
}

}  // namespace subtag
