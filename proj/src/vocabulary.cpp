#include "subtag/vocabulary.hpp"

#include <fstream>

#include "subtag/text.hpp"

namespace subtag {

void Vocabulary::add(Concept c) {
  if (c.id.empty()) throw VocabularyError("concept id is empty");
  if (c.pref_label.empty()) throw VocabularyError("concept '" + c.id + "' has empty pref_label");
  if (!by_id_.emplace(c.id, concepts_.size()).second) {
    throw VocabularyError("duplicate concept id '" + c.id + "'");
  }
  if (c.in_target_collection) ++target_count_;
  concepts_.push_back(std::move(c));
}

const Concept* Vocabulary::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &concepts_[it->second];
}

const Concept& Vocabulary::at(std::string_view id) const {
  const Concept* c = find(id);
  if (c == nullptr) throw VocabularyError("unknown concept id '" + std::string(id) + "'");
  return *c;
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      return parts;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw VocabularyError("cannot open vocabulary file: " + path.string());

  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 4) {
      throw VocabularyError(path.string() + ":" + std::to_string(line_no) + ": expected 4 columns, got " +
                            std::to_string(cols.size()));
    }
    Concept c;
    c.id = cols[0];
    c.pref_label = cols[1];
    if (!cols[2].empty()) {
      for (auto& alt : split(cols[2], '|')) {
        if (!alt.empty()) c.alt_labels.push_back(std::move(alt));
      }
    }
    if (cols[3] == "1") {
      c.in_target_collection = true;
    } else if (cols[3] == "0") {
      c.in_target_collection = false;
    } else {
      throw VocabularyError(path.string() + ":" + std::to_string(line_no) +
                            ": in_target_collection must be 0 or 1, got '" + cols[3] + "'");
    }
    try {
      vocab.add(std::move(c));
    } catch (const VocabularyError& e) {
      throw VocabularyError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return vocab;
}

}  // namespace subtag
