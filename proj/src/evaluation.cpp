#include "subtag/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace subtag {

namespace {

double harmonic_f1(double p, double r) {
  return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

void check_inputs(const RankedPredictions& predictions, const GoldMap& gold) {
  for (const auto& [doc_id, preds] : predictions) {
    (void)preds;
    if (gold.count(doc_id) == 0) {
      throw EvaluationError("predicted doc '" + doc_id + "' has no gold entry");
    }
  }
  for (const auto& [doc_id, labels] : gold) {
    if (labels.empty()) throw EvaluationError("gold set for doc '" + doc_id + "' is empty");
  }
}

}  // namespace

MetricsReport metrics_at_k(const RankedPredictions& predictions, const GoldMap& gold,
                           const std::vector<int>& ks, PatkDenominator denom) {
  check_inputs(predictions, gold);
  MetricsReport report;
  report.n_docs = gold.size();
  if (gold.empty()) return report;

  static const std::vector<std::string> kNoPredictions;
  for (const int k : ks) {
    if (k < 1) throw EvaluationError("k must be >= 1");
    double p_sum = 0.0;
    double r_sum = 0.0;
    for (const auto& [doc_id, gold_set] : gold) {
      const auto pred_it = predictions.find(doc_id);
      const auto& preds = pred_it == predictions.end() ? kNoPredictions : pred_it->second;
      const auto top_k = std::min<std::size_t>(preds.size(), static_cast<std::size_t>(k));
      std::size_t hits = 0;
      for (std::size_t i = 0; i < top_k; ++i) {
        if (gold_set.count(preds[i]) > 0) ++hits;
      }
      const std::size_t p_denom = denom == PatkDenominator::k
                                      ? static_cast<std::size_t>(k)
                                      : std::min<std::size_t>(static_cast<std::size_t>(k), preds.size());
      p_sum += p_denom > 0 ? static_cast<double>(hits) / static_cast<double>(p_denom) : 0.0;
      r_sum += static_cast<double>(hits) / static_cast<double>(gold_set.size());
    }
    const double p = p_sum / static_cast<double>(gold.size());
    const double r = r_sum / static_cast<double>(gold.size());
    report.p_at[k] = p;
    report.r_at[k] = r;
    report.f1_at[k] = harmonic_f1(p, r);
  }
  return report;
}

std::map<std::string, MetricsReport> metrics_by_group(
    const RankedPredictions& predictions, const GoldMap& gold, const std::vector<int>& ks,
    const std::map<std::string, std::string>& group_of, PatkDenominator denom) {
  std::map<std::string, GoldMap> gold_by_group;
  std::map<std::string, RankedPredictions> preds_by_group;
  for (const auto& [doc_id, labels] : gold) {
    const auto it = group_of.find(doc_id);
    if (it == group_of.end()) throw EvaluationError("doc '" + doc_id + "' has no group");
    gold_by_group[it->second][doc_id] = labels;
    const auto pred_it = predictions.find(doc_id);
    if (pred_it != predictions.end()) preds_by_group[it->second][doc_id] = pred_it->second;
  }
  std::map<std::string, MetricsReport> out;
  for (const auto& [group, group_gold] : gold_by_group) {
    out[group] = metrics_at_k(preds_by_group[group], group_gold, ks, denom);
  }
  return out;
}

PrCurve pr_curve(const std::vector<ScoredSuggestion>& suggestions, const GoldMap& gold) {
  for (const auto& s : suggestions) {
    if (gold.count(s.doc_id) == 0) {
      throw EvaluationError("suggestion for doc '" + s.doc_id + "' has no gold entry");
    }
  }
  for (const auto& [doc_id, labels] : gold) {
    if (labels.empty()) throw EvaluationError("gold set for doc '" + doc_id + "' is empty");
  }

  PrCurve curve;
  if (gold.empty() || suggestions.empty()) return curve;
  const double n_docs = static_cast<double>(gold.size());

  // Sweep thresholds from high to low, keeping per-doc kept/hit counters and
  // the running sums of per-doc precision and recall contributions.
  std::vector<const ScoredSuggestion*> order;
  order.reserve(suggestions.size());
  for (const auto& s : suggestions) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const ScoredSuggestion* a, const ScoredSuggestion* b) {
    return a->s_fin > b->s_fin;
  });

  struct DocState {
    std::size_t kept = 0;
    std::size_t hits = 0;
  };
  std::map<std::string, DocState> state;
  double precision_sum = 0.0;  // sum over docs of hits/kept (0 when kept = 0)
  double recall_sum = 0.0;     // sum over docs of hits/|gold|

  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = order[i]->s_fin;
    for (; i < order.size() && order[i]->s_fin == threshold; ++i) {
      const auto& s = *order[i];
      auto& ds = state[s.doc_id];
      const auto& gold_set = gold.at(s.doc_id);
      const double gold_size = static_cast<double>(gold_set.size());
      const double old_p = ds.kept > 0 ? static_cast<double>(ds.hits) / static_cast<double>(ds.kept) : 0.0;
      const double old_r = static_cast<double>(ds.hits) / gold_size;
      ds.kept += 1;
      if (gold_set.count(s.concept_id) > 0) ds.hits += 1;
      precision_sum += static_cast<double>(ds.hits) / static_cast<double>(ds.kept) - old_p;
      recall_sum += static_cast<double>(ds.hits) / gold_size - old_r;
    }
    curve.points.push_back({threshold, precision_sum / n_docs, recall_sum / n_docs});
  }
  return curve;
}

double pr_auc(const PrCurve& curve) {
  double auc = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : curve.points) {
    auc += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return auc;
}

std::map<double, double> alpha_sweep(const std::vector<CachedScore>& cached,
                                     const std::vector<double>& alphas, const GoldMap& gold) {
  std::map<double, double> out;
  for (const double alpha : alphas) {
    if (alpha < 0.0 || alpha > 1.0) throw EvaluationError("alpha must be in [0,1]");
    std::vector<ScoredSuggestion> staged;
    staged.reserve(cached.size());
    for (const auto& c : cached) {
      ScoredSuggestion s;
      s.doc_id = c.doc_id;
      s.concept_id = c.concept_id;
      s.s_ens = c.s_ens;
      s.s_rel = c.s_rel;
      staged.push_back(std::move(s));
    }
    CombineConfig cfg;
    cfg.alpha = alpha;
    out[alpha] = pr_auc(pr_curve(combine(std::move(staged), cfg), gold));
  }
  return out;
}

}  // namespace subtag
