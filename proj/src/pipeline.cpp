#include "subtag/pipeline.hpp"

#include <algorithm>
#include <set>

namespace subtag {

CompleteResults run_complete_stage(const std::vector<Record>& docs,
                                   const std::vector<MemberPrompt>& members, Gateway& gateway,
                                   const std::string& complete_template, const CompleteSink& sink,
                                   const CompleteResults* resume) {
  if (members.empty()) throw PipelineError("complete stage requires at least one ensemble member");

  CompleteResults results;
  for (const auto& mp : members) {
    auto& per_doc = results[mp.member.member_id];
    const std::map<std::string, CompletionOutcome>* done = nullptr;
    if (resume != nullptr) {
      const auto it = resume->find(mp.member.member_id);
      if (it != resume->end()) done = &it->second;
    }
    for (const auto& doc : docs) {
      if (done != nullptr) {
        const auto it = done->find(doc.id);
        if (it != done->end()) {
          per_doc[doc.id] = it->second;
          continue;
        }
      }
      CompletionOutcome outcome;
      try {
        const std::string query = text_representation(doc);
        const std::string prompt = assemble_prompt(mp.prompt, query, complete_template);
        outcome.keywords = parse_keywords(gateway.generate_completion(mp.member.model, prompt, query));
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
      per_doc[doc.id] = outcome;
      if (sink) sink(mp.member.member_id, doc.id, outcome);
    }
  }
  return results;
}

std::vector<EnsembleScore> summarise(const std::vector<MappedSuggestion>& mapped,
                                     std::size_t n_members) {
  if (n_members == 0) throw PipelineError("summarise requires n_members >= 1");
  std::set<std::string> observed;
  for (const auto& m : mapped) observed.insert(m.member_id);
  if (observed.size() > n_members) {
    throw PipelineError("summarise saw " + std::to_string(observed.size()) +
                        " distinct members but n_members is " + std::to_string(n_members));
  }

  // (doc, concept, member) -> max similarity within that member.
  std::map<std::tuple<std::string, std::string, std::string>, double> member_max;
  for (const auto& m : mapped) {
    auto& slot = member_max[{m.doc_id, m.concept_id, m.member_id}];
    slot = std::max(slot, m.similarity);
  }

  std::map<std::pair<std::string, std::string>, double> sums;
  for (const auto& [key, sim] : member_max) {
    sums[{std::get<0>(key), std::get<1>(key)}] += sim;
  }

  std::vector<EnsembleScore> out;
  out.reserve(sums.size());
  for (const auto& [key, sum] : sums) {
    out.push_back({key.first, key.second, sum / static_cast<double>(n_members)});
  }
  return out;
}

RelevanceLookup rank_stage(const std::vector<EnsembleScore>& suggestions,
                           const std::function<std::string(const std::string&)>& doc_text,
                           const std::function<std::string(const std::string&)>& concept_label,
                           Gateway& gateway, const ModelConfig& rank_model,
                           const std::string& rank_template, const CombineConfig& cfg,
                           const RelevanceLookup* cached) {
  RelevanceLookup out;
  for (const auto& s : suggestions) {
    const std::pair<std::string, std::string> key{s.doc_id, s.concept_id};
    if (out.count(key) > 0) continue;
    if (cached != nullptr) {
      const auto it = cached->find(key);
      if (it != cached->end()) {
        out[key] = it->second;
        continue;
      }
    }
    std::optional<int> score;
    try {
      score = gateway.rank_relevance(rank_model, doc_text(s.doc_id), concept_label(s.concept_id),
                                     rank_template);
    } catch (const TransportError&) {
      // A dead rater degrades to the default score instead of killing the batch.
    } catch (const BackendError&) {
    }
    out[key] = score ? static_cast<double>(*score) / static_cast<double>(cfg.rank_scale_max)
                     : cfg.rank_default;
  }
  return out;
}

std::vector<ScoredSuggestion> combine(std::vector<ScoredSuggestion> suggestions,
                                      const CombineConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw PipelineError("alpha must be in [0,1]");
  for (auto& s : suggestions) {
    s.s_fin = cfg.alpha * s.s_ens + (1.0 - cfg.alpha) * s.s_rel;
  }
  std::sort(suggestions.begin(), suggestions.end(),
            [](const ScoredSuggestion& a, const ScoredSuggestion& b) {
              if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
              if (a.s_fin != b.s_fin) return a.s_fin > b.s_fin;
              if (a.s_ens != b.s_ens) return a.s_ens > b.s_ens;
              return a.concept_id < b.concept_id;
            });
  std::vector<ScoredSuggestion> out;
  out.reserve(suggestions.size());
  std::size_t rank = 0;
  std::string current_doc;
  bool first = true;
  for (auto& s : suggestions) {
    if (first || s.doc_id != current_doc) {
      rank = 0;
      current_doc = s.doc_id;
      first = false;
    }
    ++rank;
    if (cfg.max_suggestions_per_doc && rank > *cfg.max_suggestions_per_doc) continue;
    s.rank = rank;
    out.push_back(std::move(s));
  }
  return out;
}

void renumber_ranks(std::vector<ScoredSuggestion>& suggestions) {
  std::size_t rank = 0;
  std::string current_doc;
  bool first = true;
  for (auto& s : suggestions) {
    if (first || s.doc_id != current_doc) {
      rank = 0;
      current_doc = s.doc_id;
      first = false;
    }
    s.rank = ++rank;
  }
}

PipelineResult run_pipeline(const std::vector<Record>& docs,
                            const std::vector<MemberPrompt>& members, const Vocabulary& vocab,
                            const VocabularyIndex& index, const Embedder& embedder,
                            Gateway& gateway, const PipelineConfig& cfg) {
  const auto completions = run_complete_stage(docs, members, gateway, cfg.complete_template);

  std::vector<KeywordItem> items;
  for (const auto& mp : members) {
    const auto& per_doc = completions.at(mp.member.member_id);
    for (const auto& doc : docs) {
      const auto it = per_doc.find(doc.id);
      if (it == per_doc.end() || it->second.error) continue;
      for (const auto& kw : it->second.keywords) {
        items.push_back({doc.id, kw, mp.member.member_id});
      }
    }
  }
  const auto mapped = map_keywords(index, embedder, items, cfg.threshold, cfg.hybrid_weight);

  const auto ensemble = summarise(mapped, members.size());

  std::map<std::string, std::string> texts;
  for (const auto& doc : docs) texts[doc.id] = text_representation(doc);
  const auto relevance = rank_stage(
      ensemble, [&](const std::string& doc_id) { return texts.at(doc_id); },
      [&](const std::string& concept_id) { return vocab.at(concept_id).pref_label; }, gateway,
      cfg.rank_model, cfg.rank_template, cfg.combine);

  std::vector<ScoredSuggestion> staged;
  staged.reserve(ensemble.size());
  for (const auto& e : ensemble) {
    ScoredSuggestion s;
    s.doc_id = e.doc_id;
    s.concept_id = e.concept_id;
    s.s_ens = e.s_ens;
    s.s_rel = relevance.at({e.doc_id, e.concept_id});
    staged.push_back(std::move(s));
  }

  auto combined = combine(std::move(staged), cfg.combine);
  auto final_flat = filter_to_target(combined, vocab);
  renumber_ranks(final_flat);

  PipelineResult result;
  for (const auto& doc : docs) result.per_doc[doc.id];
  for (const auto& s : final_flat) result.per_doc[s.doc_id].push_back(s);
  result.flat = std::move(final_flat);
  return result;
}

}  // namespace subtag
