#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace subtag {

/// One controlled-vocabulary entry. in_target_collection=false marks
/// extension-only concepts (named entities absorbed into the vocabulary so
/// that entity keywords map cleanly instead of landing on unrelated terms).
struct Concept {
  std::string id;
  std::string pref_label;
  std::vector<std::string> alt_labels;
  bool in_target_collection = true;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Vocabulary {
 public:
  void add(Concept c);

  const Concept* find(std::string_view id) const;
  const Concept& at(std::string_view id) const;

  const std::vector<Concept>& concepts() const { return concepts_; }
  std::size_t size() const { return concepts_.size(); }
  std::size_t target_count() const { return target_count_; }
  std::size_t extension_count() const { return concepts_.size() - target_count_; }

 private:
  std::vector<Concept> concepts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t target_count_ = 0;
};

/// TSV columns: id, pref_label, alt_labels (pipe-separated, may be empty),
/// in_target_collection (0/1).
Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Keeps exactly the suggestions whose concept is in the target collection,
/// preserving order. Throws VocabularyError on an unknown concept id.
/// Works on any element type with a concept_id member.
template <class Suggestion>
std::vector<Suggestion> filter_to_target(const std::vector<Suggestion>& suggestions,
                                         const Vocabulary& v) {
  std::vector<Suggestion> out;
  out.reserve(suggestions.size());
  for (const auto& s : suggestions) {
    const Concept* c = v.find(s.concept_id);
    if (c == nullptr) throw VocabularyError("unknown concept id '" + s.concept_id + "'");
    if (c->in_target_collection) out.push_back(s);
  }
  return out;
}

}  // namespace subtag
