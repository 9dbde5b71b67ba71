#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subtag/embedder.hpp"
#include "subtag/evaluation.hpp"
#include "subtag/gateway.hpp"
#include "subtag/pipeline.hpp"
#include "subtag/prompting.hpp"
#include "subtag/vocab_index.hpp"

namespace subtag {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MemberRef {
  std::string model_id;
  std::string prompt_spec_id;
};

struct OptimizerConfig {
  std::size_t budget = 200;
  std::pair<std::size_t, std::size_t> size_range = {2, 50};
  std::size_t target_size = 20;
  double epsilon = 0.0;
  std::uint64_t seed = 7;
};

/// Whole-run configuration. The canonical JSON form (defaults materialized,
/// keys sorted) hashes to the run-directory name, so identical configs share
/// artifacts and different configs never collide.
struct RunConfig {
  std::filesystem::path train_corpus;
  std::filesystem::path eval_corpus;
  std::filesystem::path vocabulary;
  std::filesystem::path complete_template;
  std::filesystem::path rank_template;

  std::vector<ModelConfig> models;
  std::vector<PromptSpec> prompt_specs;  // defaults to the 15 stock recipes
  std::vector<MemberRef> members;
  std::string rank_model_id;

  EmbedderConfig embedder;
  MappingParams mapping;
  CombineConfig combine;
  std::vector<int> evaluation_ks = {5, 10, 20, 50};
  PatkDenominator patk_denominator = PatkDenominator::k;
  OptimizerConfig optimizer;

  std::uint64_t seed = 42;
  std::filesystem::path run_root = "runs";

  const ModelConfig& model(const std::string& model_id) const;
  const PromptSpec& prompt_spec(const std::string& prompt_id) const;

  /// Members resolved against models and prompt specs, in config order.
  std::vector<EnsembleMember> resolve_members() const;
};

/// Parses and validates a config JSON document, filling documented defaults
/// (alpha 0.3, tokens 24/100, hybrid weight 0.75, threshold 0.6, the 15
/// stock prompt specs, ...). Violations are reported with their field path.
RunConfig validate_config(const nlohmann::json& raw);

RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form: every default materialized, keys sorted. Stable
/// under parse -> serialize -> parse.
nlohmann::json canonical_config(const RunConfig& cfg);

/// Hex FNV-1a of the canonical form; names the run directory.
std::string config_hash(const RunConfig& cfg);

/// Applies SUBTAG_ENDPOINT_<MODEL_ID> / SUBTAG_EMBEDDER_ENDPOINT environment
/// overrides (endpoints and credentials stay out of versioned configs; the
/// config hash is computed before overrides).
void apply_env_overrides(RunConfig& cfg);

}  // namespace subtag
