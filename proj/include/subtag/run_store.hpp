#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subtag/config.hpp"
#include "subtag/ensemble_opt.hpp"
#include "subtag/evaluation.hpp"
#include "subtag/pipeline.hpp"

namespace subtag {

class RunStoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a command needs an artifact a previous stage has not
/// produced; carries the name of the missing stage.
class MissingStageError : public std::runtime_error {
 public:
  MissingStageError(std::string stage, const std::filesystem::path& artifact)
      : std::runtime_error("missing prerequisite stage '" + stage + "' (expected artifact " +
                           artifact.string() + ")"),
        stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Exclusive ownership of a run directory via a lock file; removed on
/// destruction.
class RunLock {
 public:
  RunLock(const std::filesystem::path& run_dir, bool force);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Artifact layout inside one run directory (named by the config hash):
///   manifest.json, index.bin, complete/<member>.jsonl, mapped.jsonl,
///   summarised.jsonl, ranked.jsonl, final.jsonl, final.tsv, report.json.
class RunStore {
 public:
  RunStore(std::filesystem::path run_dir, std::string config_hash);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }

  /// Creates the directory and writes manifest.json; refuses a directory
  /// whose manifest carries a different hash unless force is set.
  void initialize(const nlohmann::json& canonical, bool force);

  std::filesystem::path index_path() const { return dir_ / "index.bin"; }
  std::filesystem::path complete_dir() const { return dir_ / "complete"; }
  std::filesystem::path complete_path(const std::string& member_id) const;
  std::filesystem::path mapped_path() const { return dir_ / "mapped.jsonl"; }
  std::filesystem::path summarised_path() const { return dir_ / "summarised.jsonl"; }
  std::filesystem::path ranked_path() const { return dir_ / "ranked.jsonl"; }
  std::filesystem::path final_path() const { return dir_ / "final.jsonl"; }
  std::filesystem::path final_tsv_path() const { return dir_ / "final.tsv"; }
  std::filesystem::path report_path() const { return dir_ / "report.json"; }
  std::filesystem::path optimize_path() const { return dir_ / "optimize.json"; }
  std::filesystem::path sweep_path() const { return dir_ / "sweep.json"; }

  void require(const std::filesystem::path& artifact, const std::string& stage) const;

  // Stage artifact IO. Writers replace atomically (write temp, rename);
  // readers validate line by line.
  void write_complete(const std::string& member_id,
                      const std::map<std::string, CompletionOutcome>& outcomes) const;
  void append_complete(const std::string& member_id, const std::string& doc_id,
                       const CompletionOutcome& outcome) const;
  CompleteResults read_complete(const std::vector<std::string>& member_ids) const;
  bool has_complete(const std::string& member_id) const;

  void write_mapped(const std::vector<MappedSuggestion>& mapped) const;
  std::vector<MappedSuggestion> read_mapped() const;

  void write_summarised(const std::vector<EnsembleScore>& scores) const;
  std::vector<EnsembleScore> read_summarised() const;

  void write_ranked(const RelevanceLookup& relevance) const;
  RelevanceLookup read_ranked() const;

  void write_final(const std::vector<ScoredSuggestion>& suggestions) const;
  std::vector<ScoredSuggestion> read_final() const;

 private:
  std::filesystem::path dir_;
  std::string hash_;
};

/// Filesystem-safe member file stem: unsafe bytes replaced, an 8-hex digest
/// of the raw id appended so distinct ids never collide.
std::string member_file_stem(const std::string& member_id);

}  // namespace subtag
