#include "subtag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "subtag/text.hpp"

namespace subtag {

std::string_view to_string(Language l) {
  return l == Language::de ? "de" : "en";
}

std::string_view to_string(RecordType t) {
  switch (t) {
    case RecordType::Article: return "Article";
    case RecordType::Book: return "Book";
    case RecordType::Conference: return "Conference";
    case RecordType::Report: return "Report";
    case RecordType::Thesis: return "Thesis";
  }
  return "Book";
}

Language parse_language(std::string_view s) {
  if (s == "de") return Language::de;
  if (s == "en") return Language::en;
  throw CorpusError("unknown language: '" + std::string(s) + "' (expected de|en)");
}

RecordType parse_record_type(std::string_view s) {
  if (s == "Article") return RecordType::Article;
  if (s == "Book") return RecordType::Book;
  if (s == "Conference") return RecordType::Conference;
  if (s == "Report") return RecordType::Report;
  if (s == "Thesis") return RecordType::Thesis;
  throw CorpusError("unknown record_type: '" + std::string(s) + "'");
}

namespace {

Record record_from_json(const nlohmann::json& j) {
  Record r;
  if (!j.is_object()) throw CorpusError("record is not a JSON object");
  for (const char* field : {"id", "title", "abstract", "language", "record_type"}) {
    if (!j.contains(field)) throw CorpusError(std::string("missing field '") + field + "'");
  }
  r.id = j.at("id").get<std::string>();
  if (r.id.empty()) throw CorpusError("record id is empty");
  r.title = j.at("title").get<std::string>();
  r.abstract = j.at("abstract").get<std::string>();
  r.language = parse_language(j.at("language").get<std::string>());
  r.record_type = parse_record_type(j.at("record_type").get<std::string>());
  if (j.contains("gold_labels")) {
    r.gold_labels = j.at("gold_labels").get<std::vector<std::string>>();
  }
  return r;
}

}  // namespace

std::vector<Record> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open records file: " + path.string());

  std::vector<Record> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Record r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const CorpusError& e) {
      throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(r.id).second) {
      throw CorpusError("duplicate record id '" + r.id + "' at " + path.string() + ":" +
                        std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string text_representation(const Record& r) {
  const auto title = trim(r.title);
  const auto abstract = trim(r.abstract);
  if (abstract.empty()) return std::string(title);
  if (title.empty()) return std::string(abstract);
  std::string out(title);
  out += ' ';
  out += abstract;
  return out;
}

namespace {

using StratumKey = std::pair<Language, RecordType>;

std::map<StratumKey, std::vector<std::size_t>> group_by_stratum(const std::vector<Record>& records) {
  std::map<StratumKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    groups[{records[i].language, records[i].record_type}].push_back(i);
  }
  return groups;
}

/// Largest-remainder quotas: floor each share, then hand out the remaining
/// units by descending fractional remainder, ties in stratum sort order.
std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& counts,
                                                  std::size_t total, std::size_t n) {
  std::vector<std::size_t> quota(counts.size());
  std::vector<std::pair<double, std::size_t>> remainders;  // (-remainder, stratum)
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    const double share = static_cast<double>(n) * static_cast<double>(counts[s]) /
                         static_cast<double>(total);
    quota[s] = static_cast<std::size_t>(share);
    assigned += quota[s];
    remainders.emplace_back(-(share - static_cast<double>(quota[s])), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; assigned < n; ++i) {
    quota[remainders[i % remainders.size()].second] += 1;
    ++assigned;
  }
  return quota;
}

}  // namespace

std::vector<Stratum> strata_proportions(const std::vector<Record>& records) {
  std::vector<Stratum> out;
  if (records.empty()) return out;
  const auto groups = group_by_stratum(records);
  for (const auto& [key, members] : groups) {
    out.push_back({key.first, key.second,
                   static_cast<double>(members.size()) / static_cast<double>(records.size())});
  }
  return out;
}

std::vector<std::vector<Record>> stratified_disjoint_split(const std::vector<Record>& records,
                                                           std::size_t n, std::size_t k,
                                                           std::uint64_t seed) {
  if (n == 0 || k == 0) throw CorpusError("split requires n >= 1 and k >= 1");
  if (n * k > records.size()) {
    throw CorpusError("infeasible split: need " + std::to_string(n * k) + " records, have " +
                      std::to_string(records.size()));
  }

  const auto groups = group_by_stratum(records);
  std::vector<std::size_t> counts;
  std::vector<const std::vector<std::size_t>*> members;
  for (const auto& [key, idx] : groups) {
    counts.push_back(idx.size());
    members.push_back(&idx);
  }
  const auto quota = largest_remainder_quotas(counts, records.size(), n);

  for (std::size_t s = 0; s < quota.size(); ++s) {
    if (quota[s] * k > counts[s]) {
      const auto& key = std::next(groups.begin(), static_cast<long>(s))->first;
      throw CorpusError("infeasible split: stratum " + std::string(to_string(key.first)) + "/" +
                        std::string(to_string(key.second)) + " has " + std::to_string(counts[s]) +
                        " records but needs " + std::to_string(quota[s] * k));
    }
  }

  std::vector<std::vector<Record>> subsets(k);
  DeterministicRng rng(splitmix64(seed));
  for (std::size_t s = 0; s < members.size(); ++s) {
    std::vector<std::size_t> pool = *members[s];
    rng.shuffle(pool);
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t c = 0; c < quota[s]; ++c) {
        subsets[j].push_back(records[pool[cursor++]]);
      }
    }
  }
  return subsets;
}

}  // namespace subtag
