#include "subtag/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "subtag/text.hpp"

namespace subtag {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(path + "." + key, "has the wrong type");
  }
}

ModelConfig parse_model(const nlohmann::json& j, const std::string& path) {
  ModelConfig m;
  if (!j.contains("model_id")) fail(path, "missing model_id");
  m.model_id = j.at("model_id").get<std::string>();
  m.endpoint = get_or<std::string>(j, "endpoint", "mock", path);
  m.temperature = get_or<double>(j, "temperature", 0.0, path);
  m.min_tokens = get_or<int>(j, "min_tokens", 24, path);
  m.max_tokens = get_or<int>(j, "max_tokens", 100, path);
  m.request_timeout = std::chrono::milliseconds(get_or<int>(j, "request_timeout_ms", 30000, path));
  m.max_retries = get_or<int>(j, "max_retries", 3, path);
  m.max_in_flight = get_or<int>(j, "max_in_flight", 4, path);
  m.retry_backoff = std::chrono::milliseconds(get_or<int>(j, "retry_backoff_ms", 250, path));
  if (m.temperature < 0.0) fail(path + ".temperature", "must be >= 0");
  if (m.min_tokens > m.max_tokens) {
    fail(path + ".min_tokens", "exceeds max_tokens (" + std::to_string(m.min_tokens) + " > " +
                                   std::to_string(m.max_tokens) + ")");
  }
  if (m.max_retries < 1) fail(path + ".max_retries", "must be >= 1");
  if (m.max_in_flight < 1) fail(path + ".max_in_flight", "must be >= 1");
  return m;
}

PromptSpec parse_prompt_spec(const nlohmann::json& j, const std::string& path) {
  PromptSpec s;
  if (!j.contains("prompt_id")) fail(path, "missing prompt_id");
  s.prompt_id = j.at("prompt_id").get<std::string>();
  try {
    s.language_mode = parse_language_mode(get_or<std::string>(j, "language_mode", "german", path));
  } catch (const PromptError& e) {
    fail(path + ".language_mode", e.what());
  }
  s.n_examples = get_or<int>(j, "n_examples", 8, path);
  if (s.n_examples != 8 && s.n_examples != 12) fail(path + ".n_examples", "must be 8 or 12");
  if (j.contains("label_count_range")) {
    const auto r = j.at("label_count_range").get<std::vector<int>>();
    if (r.size() != 2 || r[0] > r[1] || r[0] < 0) fail(path + ".label_count_range", "must be [lo, hi]");
    s.label_count_range = {r[0], r[1]};
  }
  if (j.contains("lemma_overlap_range")) {
    const auto r = j.at("lemma_overlap_range").get<std::vector<double>>();
    if (r.size() != 2 || r[0] > r[1] || r[0] < 0.0 || r[1] > 1.0) {
      fail(path + ".lemma_overlap_range", "must be [lo, hi] within [0, 1]");
    }
    s.lemma_overlap_range = {r[0], r[1]};
  }
  s.seed = get_or<std::uint64_t>(j, "seed", 0, path);
  return s;
}

}  // namespace

const ModelConfig& RunConfig::model(const std::string& model_id) const {
  const auto it = std::find_if(models.begin(), models.end(),
                               [&](const ModelConfig& m) { return m.model_id == model_id; });
  if (it == models.end()) throw ConfigError("unknown model_id '" + model_id + "'");
  return *it;
}

const PromptSpec& RunConfig::prompt_spec(const std::string& prompt_id) const {
  const auto it = std::find_if(prompt_specs.begin(), prompt_specs.end(),
                               [&](const PromptSpec& s) { return s.prompt_id == prompt_id; });
  if (it == prompt_specs.end()) throw ConfigError("unknown prompt_spec_id '" + prompt_id + "'");
  return *it;
}

std::vector<EnsembleMember> RunConfig::resolve_members() const {
  std::vector<EnsembleMember> out;
  std::set<std::string> seen;
  for (const auto& ref : members) {
    prompt_spec(ref.prompt_spec_id);  // existence check
    auto member = EnsembleMember::make(model(ref.model_id), ref.prompt_spec_id);
    if (!seen.insert(member.member_id).second) {
      throw ConfigError("duplicate ensemble member '" + member.member_id + "'");
    }
    out.push_back(std::move(member));
  }
  return out;
}

RunConfig validate_config(const nlohmann::json& raw) {
  if (!raw.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig cfg;

  const auto corpus = raw.value("corpus", nlohmann::json::object());
  cfg.train_corpus = corpus.value("train", "");
  cfg.eval_corpus = corpus.value("eval", "");
  cfg.vocabulary = raw.value("vocabulary", "");

  const auto templates = raw.value("templates", nlohmann::json::object());
  cfg.complete_template = templates.value("complete", "");
  cfg.rank_template = templates.value("rank", "");

  if (raw.contains("models")) {
    std::size_t i = 0;
    for (const auto& m : raw.at("models")) {
      cfg.models.push_back(parse_model(m, "models[" + std::to_string(i++) + "]"));
    }
  }

  cfg.seed = get_or<std::uint64_t>(raw, "seed", 42, "");

  if (raw.contains("prompt_specs")) {
    std::size_t i = 0;
    for (const auto& p : raw.at("prompt_specs")) {
      cfg.prompt_specs.push_back(parse_prompt_spec(p, "prompt_specs[" + std::to_string(i++) + "]"));
    }
  } else {
    cfg.prompt_specs = default_prompt_specs(cfg.seed);
  }
  {
    std::set<std::string> ids;
    for (const auto& s : cfg.prompt_specs) {
      if (!ids.insert(s.prompt_id).second) {
        fail("prompt_specs", "duplicate prompt_id '" + s.prompt_id + "'");
      }
    }
  }

  if (raw.contains("members")) {
    std::size_t i = 0;
    for (const auto& m : raw.at("members")) {
      const std::string path = "members[" + std::to_string(i++) + "]";
      if (!m.contains("model_id") || !m.contains("prompt_spec_id")) {
        fail(path, "needs model_id and prompt_spec_id");
      }
      cfg.members.push_back({m.at("model_id").get<std::string>(),
                             m.at("prompt_spec_id").get<std::string>()});
    }
  }
  cfg.rank_model_id = raw.value("rank_model_id", cfg.models.empty() ? "" : cfg.models.front().model_id);

  const auto embedder = raw.value("embedder", nlohmann::json::object());
  const std::string kind = embedder.value("kind", "hashed");
  if (kind == "hashed" || kind == "hashed_features") {
    cfg.embedder.kind = EmbedderKind::hashed_features;
  } else if (kind == "http" || kind == "http_service") {
    cfg.embedder.kind = EmbedderKind::http_service;
  } else {
    fail("embedder.kind", "must be hashed|http, got '" + kind + "'");
  }
  cfg.embedder.dimension = embedder.value("dimension", 256);
  cfg.embedder.endpoint = embedder.value("endpoint", "");
  if (cfg.embedder.dimension < 8) fail("embedder.dimension", "must be >= 8");
  if (cfg.embedder.kind == EmbedderKind::http_service && cfg.embedder.endpoint.empty()) {
    fail("embedder.endpoint", "required for the http embedder");
  }

  const auto mapping = raw.value("mapping", nlohmann::json::object());
  cfg.mapping.hybrid_weight = mapping.value("hybrid_weight", 0.75);
  cfg.mapping.threshold = mapping.value("threshold", 0.6);
  if (cfg.mapping.hybrid_weight < 0.0 || cfg.mapping.hybrid_weight > 1.0) {
    fail("mapping.hybrid_weight", "must be in [0, 1]");
  }
  const auto hnsw = mapping.value("hnsw", nlohmann::json::object());
  cfg.mapping.hnsw.M = hnsw.value("M", 16);
  cfg.mapping.hnsw.ef_construction = hnsw.value("ef_construction", 200);
  cfg.mapping.hnsw.ef_search = hnsw.value("ef_search", 128);
  cfg.mapping.hnsw.seed = hnsw.value("seed", std::uint64_t{1});
  if (cfg.mapping.hnsw.M < 2) fail("mapping.hnsw.M", "must be >= 2");
  const auto bm25 = mapping.value("bm25", nlohmann::json::object());
  cfg.mapping.bm25.k1 = bm25.value("k1", 1.2);
  cfg.mapping.bm25.b = bm25.value("b", 0.75);
  if (cfg.mapping.bm25.b < 0.0 || cfg.mapping.bm25.b > 1.0) fail("mapping.bm25.b", "must be in [0, 1]");

  const auto combine = raw.value("combine", nlohmann::json::object());
  cfg.combine.alpha = combine.value("alpha", 0.3);
  cfg.combine.rank_default = combine.value("rank_default", 0.5);
  cfg.combine.rank_scale_max = combine.value("rank_scale_max", 10);
  if (combine.contains("max_suggestions_per_doc")) {
    cfg.combine.max_suggestions_per_doc = combine.at("max_suggestions_per_doc").get<std::size_t>();
  }
  if (cfg.combine.alpha < 0.0 || cfg.combine.alpha > 1.0) fail("combine.alpha", "must be in [0, 1]");
  if (cfg.combine.rank_default < 0.0 || cfg.combine.rank_default > 1.0) {
    fail("combine.rank_default", "must be in [0, 1]");
  }
  if (cfg.combine.rank_scale_max < 1) fail("combine.rank_scale_max", "must be >= 1");

  const auto evaluation = raw.value("evaluation", nlohmann::json::object());
  if (evaluation.contains("ks")) {
    cfg.evaluation_ks = evaluation.at("ks").get<std::vector<int>>();
    for (const int k : cfg.evaluation_ks) {
      if (k < 1) fail("evaluation.ks", "entries must be >= 1");
    }
  }
  const std::string denom = evaluation.value("patk_denominator", "k");
  if (denom == "k") {
    cfg.patk_denominator = PatkDenominator::k;
  } else if (denom == "min") {
    cfg.patk_denominator = PatkDenominator::min_k_n;
  } else {
    fail("evaluation.patk_denominator", "must be k|min");
  }

  const auto optimizer = raw.value("optimizer", nlohmann::json::object());
  cfg.optimizer.budget = optimizer.value("budget", std::size_t{200});
  if (optimizer.contains("size_range")) {
    const auto r = optimizer.at("size_range").get<std::vector<std::size_t>>();
    if (r.size() != 2 || r[0] > r[1] || r[0] < 1) fail("optimizer.size_range", "must be [lo, hi], lo >= 1");
    cfg.optimizer.size_range = {r[0], r[1]};
  }
  cfg.optimizer.target_size = optimizer.value("target_size", std::size_t{20});
  cfg.optimizer.epsilon = optimizer.value("epsilon", 0.0);
  cfg.optimizer.seed = optimizer.value("seed", std::uint64_t{7});
  if (cfg.optimizer.budget < 1) fail("optimizer.budget", "must be >= 1");
  if (cfg.optimizer.epsilon < 0.0) fail("optimizer.epsilon", "must be >= 0");

  cfg.run_root = raw.value("run_root", "runs");

  // Cross-checks that need the full structure.
  try {
    cfg.resolve_members();
    if (!cfg.rank_model_id.empty()) cfg.model(cfg.rank_model_id);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("members: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json raw;
  try {
    in >> raw;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return validate_config(raw);
}

namespace {

nlohmann::json model_to_json(const ModelConfig& m) {
  return {
      {"model_id", m.model_id},
      {"endpoint", m.endpoint},
      {"temperature", m.temperature},
      {"min_tokens", m.min_tokens},
      {"max_tokens", m.max_tokens},
      {"request_timeout_ms", static_cast<int>(m.request_timeout.count())},
      {"max_retries", m.max_retries},
      {"max_in_flight", m.max_in_flight},
      {"retry_backoff_ms", static_cast<int>(m.retry_backoff.count())},
  };
}

nlohmann::json prompt_spec_to_json(const PromptSpec& s) {
  nlohmann::json j = {
      {"prompt_id", s.prompt_id},
      {"language_mode", std::string(to_string(s.language_mode))},
      {"n_examples", s.n_examples},
      {"seed", s.seed},
  };
  if (s.label_count_range) {
    j["label_count_range"] = {s.label_count_range->first, s.label_count_range->second};
  }
  if (s.lemma_overlap_range) {
    j["lemma_overlap_range"] = {s.lemma_overlap_range->first, s.lemma_overlap_range->second};
  }
  return j;
}

}  // namespace

nlohmann::json canonical_config(const RunConfig& cfg) {
  nlohmann::json j;
  j["corpus"] = {{"train", cfg.train_corpus.string()}, {"eval", cfg.eval_corpus.string()}};
  j["vocabulary"] = cfg.vocabulary.string();
  j["templates"] = {{"complete", cfg.complete_template.string()},
                    {"rank", cfg.rank_template.string()}};
  j["models"] = nlohmann::json::array();
  for (const auto& m : cfg.models) j["models"].push_back(model_to_json(m));
  j["prompt_specs"] = nlohmann::json::array();
  for (const auto& s : cfg.prompt_specs) j["prompt_specs"].push_back(prompt_spec_to_json(s));
  j["members"] = nlohmann::json::array();
  for (const auto& m : cfg.members) {
    j["members"].push_back({{"model_id", m.model_id}, {"prompt_spec_id", m.prompt_spec_id}});
  }
  j["rank_model_id"] = cfg.rank_model_id;
  j["embedder"] = {
      {"kind", cfg.embedder.kind == EmbedderKind::hashed_features ? "hashed" : "http"},
      {"dimension", cfg.embedder.dimension},
      {"endpoint", cfg.embedder.endpoint},
  };
  j["mapping"] = {
      {"hybrid_weight", cfg.mapping.hybrid_weight},
      {"threshold", cfg.mapping.threshold},
      {"hnsw",
       {{"M", cfg.mapping.hnsw.M},
        {"ef_construction", cfg.mapping.hnsw.ef_construction},
        {"ef_search", cfg.mapping.hnsw.ef_search},
        {"seed", cfg.mapping.hnsw.seed}}},
      {"bm25", {{"k1", cfg.mapping.bm25.k1}, {"b", cfg.mapping.bm25.b}}},
  };
  j["combine"] = {
      {"alpha", cfg.combine.alpha},
      {"rank_default", cfg.combine.rank_default},
      {"rank_scale_max", cfg.combine.rank_scale_max},
  };
  if (cfg.combine.max_suggestions_per_doc) {
    j["combine"]["max_suggestions_per_doc"] = *cfg.combine.max_suggestions_per_doc;
  }
  j["evaluation"] = {
      {"ks", cfg.evaluation_ks},
      {"patk_denominator", cfg.patk_denominator == PatkDenominator::k ? "k" : "min"},
  };
  j["optimizer"] = {
      {"budget", cfg.optimizer.budget},
      {"size_range", {cfg.optimizer.size_range.first, cfg.optimizer.size_range.second}},
      {"target_size", cfg.optimizer.target_size},
      {"epsilon", cfg.optimizer.epsilon},
      {"seed", cfg.optimizer.seed},
  };
  j["seed"] = cfg.seed;
  j["run_root"] = cfg.run_root.string();
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canonical = canonical_config(cfg).dump();
  const std::uint64_t h = fnv1a64(canonical);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

std::string env_key_for_model(const std::string& model_id) {
  std::string key = "SUBTAG_ENDPOINT_";
  for (char c : model_id) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
      key.push_back(c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
    } else {
      key.push_back('_');
    }
  }
  return key;
}

}  // namespace

void apply_env_overrides(RunConfig& cfg) {
  for (auto& m : cfg.models) {
    if (const char* value = std::getenv(env_key_for_model(m.model_id).c_str())) {
      m.endpoint = value;
    }
  }
  if (const char* value = std::getenv("SUBTAG_EMBEDDER_ENDPOINT")) {
    cfg.embedder.endpoint = value;
  }
}

}  // namespace subtag
