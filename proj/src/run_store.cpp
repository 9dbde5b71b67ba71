#include "subtag/run_store.hpp"

#include <unistd.h>

#include <fstream>

#include <json.hpp>

#include "subtag/text.hpp"

namespace subtag {

namespace {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw RunStoreError("cannot write " + tmp.string());
    out << content;
    if (!out) throw RunStoreError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RunStoreError("cannot open " + path.string());
  std::vector<nlohmann::json> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      lines.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw RunStoreError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

nlohmann::json outcome_to_json(const std::string& doc_id, const CompletionOutcome& outcome) {
  nlohmann::json j;
  j["doc_id"] = doc_id;
  if (outcome.error) {
    j["error"] = *outcome.error;
  } else {
    j["keywords"] = outcome.keywords;
  }
  return j;
}

}  // namespace

std::string member_file_stem(const std::string& member_id) {
  std::string stem;
  for (char c : member_id) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
    stem.push_back(safe ? c : '_');
  }
  char digest[9];
  std::snprintf(digest, sizeof(digest), "%08x",
                static_cast<unsigned>(fnv1a64(member_id) & 0xffffffffu));
  return stem + "-" + digest;
}

RunLock::RunLock(const std::filesystem::path& run_dir, bool force) : path_(run_dir / ".lock") {
  std::filesystem::create_directories(run_dir);
  if (std::filesystem::exists(path_)) {
    if (!force) {
      throw RunStoreError("run directory is locked (" + path_.string() +
                          "); pass --force if the owning process is gone");
    }
    std::filesystem::remove(path_);
  }
  std::ofstream out(path_);
  out << "pid " << ::getpid() << "\n";
}

RunLock::~RunLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

RunStore::RunStore(std::filesystem::path run_dir, std::string config_hash)
    : dir_(std::move(run_dir)), hash_(std::move(config_hash)) {}

void RunStore::initialize(const nlohmann::json& canonical, bool force) {
  std::filesystem::create_directories(dir_);
  std::filesystem::create_directories(complete_dir());
  const auto manifest_path = dir_ / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    nlohmann::json existing;
    try {
      in >> existing;
    } catch (const nlohmann::json::exception& e) {
      throw RunStoreError(manifest_path.string() + ": " + e.what());
    }
    if (existing.value("config_hash", "") != hash_ && !force) {
      throw RunStoreError("run directory " + dir_.string() +
                          " was produced by a different config (hash mismatch); "
                          "pass --force to overwrite");
    }
  }
  nlohmann::json manifest;
  manifest["config_hash"] = hash_;
  manifest["config"] = canonical;
  atomic_write(manifest_path, manifest.dump(2) + "\n");
}

std::filesystem::path RunStore::complete_path(const std::string& member_id) const {
  return complete_dir() / (member_file_stem(member_id) + ".jsonl");
}

void RunStore::require(const std::filesystem::path& artifact, const std::string& stage) const {
  if (!std::filesystem::exists(artifact)) throw MissingStageError(stage, artifact);
}

void RunStore::write_complete(const std::string& member_id,
                              const std::map<std::string, CompletionOutcome>& outcomes) const {
  std::string content;
  for (const auto& [doc_id, outcome] : outcomes) {
    content += outcome_to_json(doc_id, outcome).dump();
    content += '\n';
  }
  std::filesystem::create_directories(complete_dir());
  atomic_write(complete_path(member_id), content);
}

void RunStore::append_complete(const std::string& member_id, const std::string& doc_id,
                               const CompletionOutcome& outcome) const {
  std::filesystem::create_directories(complete_dir());
  std::ofstream out(complete_path(member_id), std::ios::app);
  if (!out) throw RunStoreError("cannot append to " + complete_path(member_id).string());
  out << outcome_to_json(doc_id, outcome).dump() << '\n';
}

bool RunStore::has_complete(const std::string& member_id) const {
  return std::filesystem::exists(complete_path(member_id));
}

CompleteResults RunStore::read_complete(const std::vector<std::string>& member_ids) const {
  CompleteResults results;
  for (const auto& member_id : member_ids) {
    const auto path = complete_path(member_id);
    if (!std::filesystem::exists(path)) continue;
    auto& per_doc = results[member_id];
    for (const auto& j : read_jsonl(path)) {
      CompletionOutcome outcome;
      if (j.contains("error")) {
        outcome.error = j.at("error").get<std::string>();
      } else {
        outcome.keywords = j.value("keywords", std::vector<std::string>{});
      }
      per_doc[j.at("doc_id").get<std::string>()] = std::move(outcome);
    }
  }
  return results;
}

void RunStore::write_mapped(const std::vector<MappedSuggestion>& mapped) const {
  std::string content;
  for (const auto& m : mapped) {
    content += nlohmann::json{{"doc_id", m.doc_id},
                              {"keyword", m.keyword},
                              {"concept_id", m.concept_id},
                              {"similarity", m.similarity},
                              {"member_id", m.member_id}}
                   .dump();
    content += '\n';
  }
  atomic_write(mapped_path(), content);
}

std::vector<MappedSuggestion> RunStore::read_mapped() const {
  std::vector<MappedSuggestion> out;
  for (const auto& j : read_jsonl(mapped_path())) {
    out.push_back({j.at("doc_id").get<std::string>(), j.at("keyword").get<std::string>(),
                   j.at("concept_id").get<std::string>(), j.at("similarity").get<double>(),
                   j.at("member_id").get<std::string>()});
  }
  return out;
}

void RunStore::write_summarised(const std::vector<EnsembleScore>& scores) const {
  std::string content;
  for (const auto& s : scores) {
    content += nlohmann::json{{"doc_id", s.doc_id}, {"concept_id", s.concept_id}, {"s_ens", s.s_ens}}
                   .dump();
    content += '\n';
  }
  atomic_write(summarised_path(), content);
}

std::vector<EnsembleScore> RunStore::read_summarised() const {
  std::vector<EnsembleScore> out;
  for (const auto& j : read_jsonl(summarised_path())) {
    out.push_back({j.at("doc_id").get<std::string>(), j.at("concept_id").get<std::string>(),
                   j.at("s_ens").get<double>()});
  }
  return out;
}

void RunStore::write_ranked(const RelevanceLookup& relevance) const {
  std::string content;
  for (const auto& [key, s_rel] : relevance) {
    content += nlohmann::json{{"doc_id", key.first}, {"concept_id", key.second}, {"s_rel", s_rel}}
                   .dump();
    content += '\n';
  }
  atomic_write(ranked_path(), content);
}

RelevanceLookup RunStore::read_ranked() const {
  RelevanceLookup out;
  for (const auto& j : read_jsonl(ranked_path())) {
    out[{j.at("doc_id").get<std::string>(), j.at("concept_id").get<std::string>()}] =
        j.at("s_rel").get<double>();
  }
  return out;
}

void RunStore::write_final(const std::vector<ScoredSuggestion>& suggestions) const {
  std::string jsonl;
  std::string tsv = "doc_id\trank\tconcept_id\ts_fin\n";
  for (const auto& s : suggestions) {
    jsonl += nlohmann::json{{"doc_id", s.doc_id}, {"concept_id", s.concept_id},
                            {"s_ens", s.s_ens},  {"s_rel", s.s_rel},
                            {"s_fin", s.s_fin},  {"rank", s.rank}}
                 .dump();
    jsonl += '\n';
    tsv += s.doc_id + "\t" + std::to_string(s.rank) + "\t" + s.concept_id + "\t" +
           nlohmann::json(s.s_fin).dump() + "\n";
  }
  atomic_write(final_path(), jsonl);
  atomic_write(final_tsv_path(), tsv);
}

std::vector<ScoredSuggestion> RunStore::read_final() const {
  std::vector<ScoredSuggestion> out;
  for (const auto& j : read_jsonl(final_path())) {
    ScoredSuggestion s;
    s.doc_id = j.at("doc_id").get<std::string>();
    s.concept_id = j.at("concept_id").get<std::string>();
    s.s_ens = j.at("s_ens").get<double>();
    s.s_rel = j.at("s_rel").get<double>();
    s.s_fin = j.at("s_fin").get<double>();
    s.rank = j.at("rank").get<std::size_t>();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace subtag
