// subtag - LLM-ensemble subject indexing: generate free keywords with
// model x prompt ensemble members, map them onto a controlled vocabulary via
// hybrid dense+BM25 search, aggregate, re-rank and combine into ranked
// subject-term lists. Stages read and write artifacts in a run directory
// keyed by the config hash, so repeated invocations reuse cached work.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "subtag/config.hpp"
#include "subtag/corpus.hpp"
#include "subtag/ensemble_opt.hpp"
#include "subtag/evaluation.hpp"
#include "subtag/gateway.hpp"
#include "subtag/pipeline.hpp"
#include "subtag/run_store.hpp"
#include "subtag/text.hpp"
#include "subtag/vocab_index.hpp"

namespace {

using namespace subtag;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitMissingStage = 2;
constexpr int kExitBackend = 3;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> threshold;
  std::optional<double> hybrid_weight;
  std::optional<std::string> run_dir;
  bool force = false;
};

struct Context {
  RunConfig cfg;
  std::string hash;
  std::filesystem::path run_dir;
};

Context make_context(const CliOptions& opts) {
  Context ctx;
  ctx.cfg = load_config(opts.config_path);
  if (opts.seed) ctx.cfg.seed = *opts.seed;
  if (opts.alpha) {
    if (*opts.alpha < 0.0 || *opts.alpha > 1.0) throw ConfigError("combine.alpha: must be in [0, 1]");
    ctx.cfg.combine.alpha = *opts.alpha;
  }
  if (opts.threshold) ctx.cfg.mapping.threshold = *opts.threshold;
  if (opts.hybrid_weight) {
    if (*opts.hybrid_weight < 0.0 || *opts.hybrid_weight > 1.0) {
      throw ConfigError("mapping.hybrid_weight: must be in [0, 1]");
    }
    ctx.cfg.mapping.hybrid_weight = *opts.hybrid_weight;
  }
  // Hash covers every semantic setting; endpoint/credential env overrides are
  // applied afterwards and do not change the hash.
  ctx.hash = config_hash(ctx.cfg);
  apply_env_overrides(ctx.cfg);
  ctx.run_dir = opts.run_dir ? std::filesystem::path(*opts.run_dir)
                             : ctx.cfg.run_root / ctx.hash;
  return ctx;
}

std::vector<Record> load_required_records(const std::filesystem::path& path, const char* which) {
  if (path.empty()) throw ConfigError(std::string("corpus.") + which + ": path not configured");
  return load_records(path);
}

Vocabulary load_required_vocabulary(const RunConfig& cfg) {
  if (cfg.vocabulary.empty()) throw ConfigError("vocabulary: path not configured");
  return load_vocabulary(cfg.vocabulary);
}

std::string read_text_file(const std::filesystem::path& path, const char* which) {
  if (path.empty()) throw ConfigError(std::string("templates.") + which + ": path not configured");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open template file: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

std::vector<MemberPrompt> build_member_prompts(const RunConfig& cfg,
                                               const std::vector<Record>& train,
                                               const Vocabulary& vocab) {
  std::vector<MemberPrompt> prompts;
  for (auto& member : cfg.resolve_members()) {
    const auto& spec = cfg.prompt_spec(member.prompt_spec_id);
    prompts.push_back({member, sample_examples(train, spec, vocab)});
  }
  if (prompts.empty()) throw ConfigError("members: at least one ensemble member is required");
  return prompts;
}

VocabularyIndex ensure_index(const RunStore& store, const RunConfig& cfg, const Vocabulary& vocab) {
  if (std::filesystem::exists(store.index_path())) {
    return VocabularyIndex::load(store.index_path());
  }
  const auto embedder = make_embedder(cfg.embedder);
  auto index = VocabularyIndex::build(vocab, *embedder, cfg.mapping);
  index.save(store.index_path());
  return index;
}

GoldMap gold_from_records(const std::vector<Record>& records) {
  GoldMap gold;
  for (const auto& r : records) {
    if (!r.gold_labels || r.gold_labels->empty()) continue;
    gold[r.id] = std::set<std::string>(r.gold_labels->begin(), r.gold_labels->end());
  }
  return gold;
}

// --- stage bodies (shared between individual subcommands and `run`) ---

void stage_complete(const Context& ctx, const RunStore& store, Gateway& gateway) {
  const auto train = load_required_records(ctx.cfg.train_corpus, "train");
  const auto docs = load_required_records(ctx.cfg.eval_corpus, "eval");
  const auto vocab = load_required_vocabulary(ctx.cfg);
  const auto members = build_member_prompts(ctx.cfg, train, vocab);
  const auto template_text = read_text_file(ctx.cfg.complete_template, "complete");

  std::vector<std::string> member_ids;
  for (const auto& m : members) member_ids.push_back(m.member.member_id);
  const auto resume = store.read_complete(member_ids);

  const auto sink = [&](const std::string& member_id, const std::string& doc_id,
                        const CompletionOutcome& outcome) {
    store.append_complete(member_id, doc_id, outcome);
  };
  run_complete_stage(docs, members, gateway, template_text, sink, &resume);
}

void stage_map(const Context& ctx, const RunStore& store, const VocabularyIndex& index) {
  const auto docs = load_required_records(ctx.cfg.eval_corpus, "eval");
  const auto members = ctx.cfg.resolve_members();

  std::vector<std::string> member_ids;
  for (const auto& m : members) member_ids.push_back(m.member_id);
  if (member_ids.empty()) throw ConfigError("members: at least one ensemble member is required");
  for (const auto& id : member_ids) {
    store.require(store.complete_path(id), "complete");
  }
  const auto completions = store.read_complete(member_ids);

  std::vector<KeywordItem> items;
  for (const auto& id : member_ids) {
    const auto& per_doc = completions.at(id);
    for (const auto& doc : docs) {
      const auto it = per_doc.find(doc.id);
      if (it == per_doc.end() || it->second.error) continue;
      for (const auto& kw : it->second.keywords) items.push_back({doc.id, kw, id});
    }
  }
  const auto embedder = make_embedder(ctx.cfg.embedder);
  store.write_mapped(
      map_keywords(index, *embedder, items, ctx.cfg.mapping.threshold, ctx.cfg.mapping.hybrid_weight));
}

void stage_summarise(const Context& ctx, const RunStore& store) {
  store.require(store.mapped_path(), "map");
  const auto mapped = store.read_mapped();
  store.write_summarised(summarise(mapped, ctx.cfg.members.size()));
}

void stage_rank(const Context& ctx, const RunStore& store, Gateway& gateway) {
  store.require(store.summarised_path(), "summarise");
  const auto scores = store.read_summarised();
  const auto docs = load_required_records(ctx.cfg.eval_corpus, "eval");
  const auto vocab = load_required_vocabulary(ctx.cfg);
  const auto rank_template = read_text_file(ctx.cfg.rank_template, "rank");
  if (ctx.cfg.rank_model_id.empty()) throw ConfigError("rank_model_id: not configured");
  const auto& rank_model = ctx.cfg.model(ctx.cfg.rank_model_id);

  std::map<std::string, std::string> texts;
  for (const auto& doc : docs) texts[doc.id] = text_representation(doc);

  RelevanceLookup cached;
  if (std::filesystem::exists(store.ranked_path())) cached = store.read_ranked();

  const auto relevance = rank_stage(
      scores, [&](const std::string& doc_id) { return texts.at(doc_id); },
      [&](const std::string& concept_id) { return vocab.at(concept_id).pref_label; }, gateway,
      rank_model, rank_template, ctx.cfg.combine, cached.empty() ? nullptr : &cached);
  store.write_ranked(relevance);
}

void stage_combine(const Context& ctx, const RunStore& store) {
  store.require(store.summarised_path(), "summarise");
  store.require(store.ranked_path(), "rank");
  const auto scores = store.read_summarised();
  const auto relevance = store.read_ranked();
  const auto vocab = load_required_vocabulary(ctx.cfg);

  std::vector<ScoredSuggestion> staged;
  staged.reserve(scores.size());
  for (const auto& e : scores) {
    ScoredSuggestion s;
    s.doc_id = e.doc_id;
    s.concept_id = e.concept_id;
    s.s_ens = e.s_ens;
    const auto it = relevance.find({e.doc_id, e.concept_id});
    s.s_rel = it != relevance.end() ? it->second : ctx.cfg.combine.rank_default;
    staged.push_back(std::move(s));
  }
  auto combined = combine(std::move(staged), ctx.cfg.combine);
  auto final_flat = filter_to_target(combined, vocab);
  renumber_ranks(final_flat);
  store.write_final(final_flat);
}

// --- subcommand drivers ---

int cmd_ingest(const Context& ctx, const RunStore& store) {
  nlohmann::json report;
  for (const auto& [name, path] :
       {std::pair{"train", ctx.cfg.train_corpus}, std::pair{"eval", ctx.cfg.eval_corpus}}) {
    if (path.empty()) continue;
    const auto records = load_records(path);
    nlohmann::json strata = nlohmann::json::array();
    for (const auto& s : strata_proportions(records)) {
      strata.push_back({{"language", std::string(to_string(s.language))},
                        {"record_type", std::string(to_string(s.record_type))},
                        {"proportion", s.proportion}});
    }
    report[name] = {{"path", path.string()}, {"n_records", records.size()}, {"strata", strata}};
    std::cout << name << ": " << records.size() << " records ok\n";
  }
  std::ofstream out(store.dir() / "ingest.json");
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_vocab_stats(const Context& ctx) {
  const auto vocab = load_required_vocabulary(ctx.cfg);
  std::cout << "concepts: " << vocab.size() << "\n"
            << "target collection: " << vocab.target_count() << "\n"
            << "extension only: " << vocab.extension_count() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Context& ctx, const RunStore& store, const std::string& group_by,
                 const std::string& curve_out) {
  store.require(store.final_path(), "combine");
  const auto final_flat = store.read_final();
  const auto docs = load_required_records(ctx.cfg.eval_corpus, "eval");
  const auto gold = gold_from_records(docs);
  if (gold.empty()) throw ConfigError("corpus.eval: no gold labels present, cannot evaluate");

  RankedPredictions predictions;
  for (const auto& s : final_flat) {
    if (gold.count(s.doc_id) > 0) predictions[s.doc_id].push_back(s.concept_id);
  }
  std::vector<ScoredSuggestion> scored;
  for (const auto& s : final_flat) {
    if (gold.count(s.doc_id) > 0) scored.push_back(s);
  }

  auto report = metrics_at_k(predictions, gold, ctx.cfg.evaluation_ks, ctx.cfg.patk_denominator);
  const auto curve = pr_curve(scored, gold);
  report.pr_auc = pr_auc(curve);

  const auto report_to_json = [](const MetricsReport& r) {
    nlohmann::json j;
    j["n_docs"] = r.n_docs;
    j["pr_auc"] = r.pr_auc;
    for (const auto& [k, v] : r.p_at) j["p_at"][std::to_string(k)] = v;
    for (const auto& [k, v] : r.r_at) j["r_at"][std::to_string(k)] = v;
    for (const auto& [k, v] : r.f1_at) j["f1_at"][std::to_string(k)] = v;
    return j;
  };

  nlohmann::json out = report_to_json(report);
  if (!group_by.empty()) {
    if (group_by != "language" && group_by != "record_type") {
      throw ConfigError("--group-by: must be language|record_type");
    }
    std::map<std::string, std::string> group_of;
    for (const auto& doc : docs) {
      group_of[doc.id] = group_by == "language" ? std::string(to_string(doc.language))
                                                : std::string(to_string(doc.record_type));
    }
    for (const auto& [group, group_report] :
         metrics_by_group(predictions, gold, ctx.cfg.evaluation_ks, group_of,
                          ctx.cfg.patk_denominator)) {
      out["groups"][group] = report_to_json(group_report);
    }
  }

  std::ofstream report_file(store.report_path());
  report_file << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";

  if (!curve_out.empty()) {
    std::ofstream csv(curve_out);
    csv << "threshold,precision,recall\n";
    for (const auto& p : curve.points) {
      csv << nlohmann::json(p.threshold).dump() << "," << nlohmann::json(p.precision).dump() << ","
          << nlohmann::json(p.recall).dump() << "\n";
    }
  }
  return kExitOk;
}

int cmd_optimize(const Context& ctx, const RunStore& store) {
  store.require(store.mapped_path(), "map");
  store.require(store.ranked_path(), "rank");
  const auto docs = load_required_records(ctx.cfg.eval_corpus, "eval");
  const auto gold = gold_from_records(docs);
  if (gold.empty()) throw ConfigError("corpus.eval: no gold labels present, cannot optimize");
  const auto vocab = load_required_vocabulary(ctx.cfg);

  EvalCache cache{store.read_mapped(), store.read_ranked()};
  SubsetEvalConfig eval_cfg;
  eval_cfg.combine = ctx.cfg.combine;
  eval_cfg.vocabulary = &vocab;
  const Objective objective = [&](const std::vector<std::string>& ids) {
    return evaluate_subset(ids, cache, gold, eval_cfg);
  };

  std::vector<std::string> member_ids;
  for (const auto& m : ctx.cfg.resolve_members()) member_ids.push_back(m.member_id);
  if (member_ids.empty()) throw ConfigError("members: nothing to optimize over");

  const auto& opt = ctx.cfg.optimizer;
  const std::pair<std::size_t, std::size_t> size_range = {
      std::min(opt.size_range.first, member_ids.size()),
      std::min(opt.size_range.second, member_ids.size())};
  const auto sampled = monte_carlo_search(member_ids, opt.budget, size_range, opt.seed, objective);
  const auto pruned =
      chain_prune(sampled, std::min(opt.target_size, sampled.member_ids.size()), opt.epsilon,
                  objective);

  nlohmann::json trace = nlohmann::json::array();
  for (const auto& step : pruned.trace) {
    trace.push_back({{"removed", step.removed}, {"objective", step.objective}});
  }
  const nlohmann::json out = {
      {"seed", opt.seed},
      {"budget", opt.budget},
      {"size_range", {size_range.first, size_range.second}},
      {"monte_carlo", {{"member_ids", sampled.member_ids}, {"objective", sampled.objective}}},
      {"chain",
       {{"member_ids", pruned.subset.member_ids},
        {"objective", pruned.subset.objective},
        {"trace", trace}}},
  };
  std::ofstream out_file(store.optimize_path());
  out_file << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep_alpha(const Context& ctx, const RunStore& store, std::vector<double> alphas) {
  store.require(store.summarised_path(), "summarise");
  store.require(store.ranked_path(), "rank");
  const auto docs = load_required_records(ctx.cfg.eval_corpus, "eval");
  const auto gold = gold_from_records(docs);
  if (gold.empty()) throw ConfigError("corpus.eval: no gold labels present, cannot sweep");

  const auto scores = store.read_summarised();
  const auto relevance = store.read_ranked();
  std::vector<CachedScore> cached;
  cached.reserve(scores.size());
  for (const auto& e : scores) {
    if (gold.count(e.doc_id) == 0) continue;
    const auto it = relevance.find({e.doc_id, e.concept_id});
    cached.push_back({e.doc_id, e.concept_id, e.s_ens,
                      it != relevance.end() ? it->second : ctx.cfg.combine.rank_default});
  }

  if (alphas.empty()) {
    for (int i = 0; i <= 10; ++i) alphas.push_back(static_cast<double>(i) / 10.0);
  }
  const auto sweep = alpha_sweep(cached, alphas, gold);

  nlohmann::json out;
  for (const auto& [alpha, auc] : sweep) {
    out[nlohmann::json(alpha).dump()] = auc;
    std::cout << "alpha " << alpha << "  pr_auc " << auc << "\n";
  }
  std::ofstream out_file(store.sweep_path());
  out_file << out.dump(2) << "\n";
  return kExitOk;
}

int run_command(const std::string& command, const CliOptions& opts, const std::string& group_by,
                const std::string& curve_out, const std::vector<double>& alphas) {
  Context ctx = make_context(opts);

  if (command == "vocab-stats") return cmd_vocab_stats(ctx);

  RunStore store(ctx.run_dir, ctx.hash);
  RunLock lock(ctx.run_dir, opts.force);
  store.initialize(canonical_config(ctx.cfg), opts.force);

  if (command == "ingest") return cmd_ingest(ctx, store);

  if (command == "build-index") {
    const auto vocab = load_required_vocabulary(ctx.cfg);
    ensure_index(store, ctx.cfg, vocab);
    std::cout << "index ready: " << store.index_path().string() << "\n";
    return kExitOk;
  }

  Gateway gateway(ctx.cfg.seed);

  if (command == "complete") {
    stage_complete(ctx, store, gateway);
  } else if (command == "map") {
    store.require(store.index_path(), "build-index");
    const auto index = VocabularyIndex::load(store.index_path());
    stage_map(ctx, store, index);
  } else if (command == "summarise") {
    stage_summarise(ctx, store);
  } else if (command == "rank") {
    stage_rank(ctx, store, gateway);
  } else if (command == "combine") {
    stage_combine(ctx, store);
  } else if (command == "run") {
    const auto vocab = load_required_vocabulary(ctx.cfg);
    const auto index = ensure_index(store, ctx.cfg, vocab);
    stage_complete(ctx, store, gateway);
    if (!std::filesystem::exists(store.mapped_path())) stage_map(ctx, store, index);
    if (!std::filesystem::exists(store.summarised_path())) stage_summarise(ctx, store);
    stage_rank(ctx, store, gateway);
    stage_combine(ctx, store);
    std::cout << "run complete: " << store.final_path().string() << "\n"
              << "completions requested: " << gateway.completions_requested() << "\n"
              << "rank requests: " << gateway.ranks_requested() << "\n";
  } else if (command == "evaluate") {
    return cmd_evaluate(ctx, store, group_by, curve_out);
  } else if (command == "optimize") {
    return cmd_optimize(ctx, store);
  } else if (command == "sweep-alpha") {
    return cmd_sweep_alpha(ctx, store, alphas);
  } else {
    throw ConfigError("unknown command: " + command);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-ensemble subject indexing pipeline"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string group_by;
  std::string curve_out;
  std::vector<double> alphas;

  const auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* config_opt = sub->add_option("-c,--config", opts.config_path, "run configuration JSON");
    if (needs_config) config_opt->required();
    sub->add_option("--seed", opts.seed, "override the run seed");
    sub->add_option("--alpha", opts.alpha, "override combine.alpha");
    sub->add_option("--threshold", opts.threshold, "override mapping.threshold");
    sub->add_option("--hybrid-weight", opts.hybrid_weight, "override mapping.hybrid_weight");
    sub->add_option("--run-dir", opts.run_dir, "use this run directory instead of run_root/<hash>");
    sub->add_flag("--force", opts.force, "take over a locked or foreign run directory");
  };

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "validate corpora and report stratum proportions"},
      {"build-index", "embed the vocabulary and build the search index"},
      {"complete", "generate keywords for every member x document"},
      {"map", "map generated keywords onto vocabulary concepts"},
      {"summarise", "aggregate mapped suggestions into ensemble scores"},
      {"rank", "rate each (document, concept) suggestion with the rank model"},
      {"combine", "fuse ensemble and relevance scores into final rankings"},
      {"run", "complete -> map -> summarise -> rank -> combine"},
      {"optimize", "search for the best ensemble member subset by PR-AUC"},
      {"evaluate", "score predictions against gold labels"},
      {"sweep-alpha", "PR-AUC for a range of combine weights"},
      {"vocab-stats", "print vocabulary collection counts"},
  };
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    add_common(sub);
    if (name == "evaluate") {
      sub->add_option("--group-by", group_by, "also report metrics per language|record_type");
      sub->add_option("--curve-out", curve_out, "write PR curve points to this CSV file");
    }
    if (name == "sweep-alpha") {
      sub->add_option("--alphas", alphas, "alpha values to sweep (default 0.0..1.0 step 0.1)");
    }
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run_command(command, opts, group_by, curve_out, alphas);
  } catch (const MissingStageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingStage;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const EmbedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
