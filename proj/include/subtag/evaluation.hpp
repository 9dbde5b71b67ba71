#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "subtag/pipeline.hpp"

namespace subtag {

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// doc_id -> gold concept ids. Docs present here define the evaluation
/// universe; docs without predictions contribute zeros.
using GoldMap = std::map<std::string, std::set<std::string>>;

/// doc_id -> concept ids in rank order.
using RankedPredictions = std::map<std::string, std::vector<std::string>>;

enum class PatkDenominator { k, min_k_n };

struct MetricsReport {
  std::map<int, double> p_at;
  std::map<int, double> r_at;
  std::map<int, double> f1_at;
  double pr_auc = 0.0;
  std::size_t n_docs = 0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Points sorted by threshold descending; recall is nondecreasing along the
/// list.
struct PrCurve {
  std::vector<PrPoint> points;
};

/// Doc-averaged P@k, R@k and F1@k. Per doc, P@k = hits / k (or
/// hits / min(k, n) under min_k_n), R@k = hits / |gold|; the report holds
/// arithmetic means over all gold docs and F1 as the harmonic mean of the
/// averaged P and R. Throws when a predicted doc has no gold entry or a
/// gold set is empty.
MetricsReport metrics_at_k(const RankedPredictions& predictions, const GoldMap& gold,
                           const std::vector<int>& ks,
                           PatkDenominator denom = PatkDenominator::k);

/// Per-group metrics for a partition of the docs (by language, record type,
/// ...). Returns group label -> report.
std::map<std::string, MetricsReport> metrics_by_group(
    const RankedPredictions& predictions, const GoldMap& gold, const std::vector<int>& ks,
    const std::map<std::string, std::string>& group_of, PatkDenominator denom = PatkDenominator::k);

/// Confidence-threshold PR curve: one point per distinct s_fin value,
/// descending. At threshold t a doc keeps its suggestions with s_fin >= t;
/// docs with nothing kept contribute precision 0 and recall 0 rather than
/// being excluded.
PrCurve pr_curve(const std::vector<ScoredSuggestion>& suggestions, const GoldMap& gold);

/// Step integration over recall: sum of (R_i - R_{i-1}) * P_i with R_0 = 0.
double pr_auc(const PrCurve& curve);

/// One (doc, concept) with both stage scores cached, ready to recombine.
struct CachedScore {
  std::string doc_id;
  std::string concept_id;
  double s_ens = 0.0;
  double s_rel = 0.0;
};

/// Recombines the cached scores with each alpha and reports the resulting
/// PR-AUC; no model calls involved.
std::map<double, double> alpha_sweep(const std::vector<CachedScore>& cached,
                                     const std::vector<double>& alphas, const GoldMap& gold);

}  // namespace subtag
