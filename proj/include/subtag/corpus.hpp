#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace subtag {

enum class Language { de, en };
enum class RecordType { Article, Book, Conference, Report, Thesis };

std::string_view to_string(Language l);
std::string_view to_string(RecordType t);
Language parse_language(std::string_view s);
RecordType parse_record_type(std::string_view s);

/// One catalog document. gold_labels holds concept ids; it is absent for
/// unlabeled test data and may be present-but-empty.
struct Record {
  std::string id;
  std::string title;
  std::string abstract;
  Language language = Language::de;
  RecordType record_type = RecordType::Book;
  std::optional<std::vector<std::string>> gold_labels;
};

struct Stratum {
  Language language;
  RecordType record_type;
  double proportion = 0.0;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads one JSON object per line. Rejects malformed lines (with the line
/// number) and duplicate ids (naming the id).
std::vector<Record> load_records(const std::filesystem::path& path);

/// Title and abstract joined by a single space; no leading or trailing
/// whitespace, title-only when the abstract is empty.
std::string text_representation(const Record& r);

/// Proportion of each (language, record_type) stratum, sorted by language
/// then record type. Proportions sum to 1.
std::vector<Stratum> strata_proportions(const std::vector<Record>& records);

/// Draws k pairwise-disjoint subsets of exactly n records each, preserving
/// the corpus' language x record_type proportions via largest-remainder
/// quotas. Deterministic for a fixed seed. Throws CorpusError when a stratum
/// cannot supply k times its quota.
std::vector<std::vector<Record>> stratified_disjoint_split(const std::vector<Record>& records,
                                                           std::size_t n, std::size_t k,
                                                           std::uint64_t seed);

}  // namespace subtag
