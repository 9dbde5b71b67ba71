#include "subtag/prompting.hpp"

#include <algorithm>
#include <unordered_set>

#include "subtag/text.hpp"

namespace subtag {

std::string_view to_string(LanguageMode m) {
  switch (m) {
    case LanguageMode::german: return "german";
    case LanguageMode::english: return "english";
    case LanguageMode::mixed: return "mixed";
  }
  return "mixed";
}

LanguageMode parse_language_mode(std::string_view s) {
  if (s == "german") return LanguageMode::german;
  if (s == "english") return LanguageMode::english;
  if (s == "mixed") return LanguageMode::mixed;
  throw PromptError("unknown language_mode: '" + std::string(s) + "'");
}

double lemma_overlap(const std::string& text, const std::vector<std::string>& labels) {
  if (labels.empty()) throw PromptError("lemma_overlap requires a nonempty label list");
  const auto text_tokens = tokenize(text);
  const std::unordered_set<std::string> text_set(text_tokens.begin(), text_tokens.end());
  std::size_t contained = 0;
  for (const auto& label : labels) {
    const auto label_tokens = tokenize(label);
    const bool all = !label_tokens.empty() &&
                     std::all_of(label_tokens.begin(), label_tokens.end(),
                                 [&](const std::string& t) { return text_set.count(t) > 0; });
    if (all) ++contained;
  }
  return static_cast<double>(contained) / static_cast<double>(labels.size());
}

namespace {

bool language_matches(LanguageMode mode, Language lang) {
  switch (mode) {
    case LanguageMode::german: return lang == Language::de;
    case LanguageMode::english: return lang == Language::en;
    case LanguageMode::mixed: return true;
  }
  return true;
}

std::vector<std::string> resolve_labels(const Record& r, const Vocabulary& vocab) {
  std::vector<std::string> labels;
  for (const auto& id : *r.gold_labels) {
    labels.push_back(vocab.at(id).pref_label);
  }
  return labels;
}

}  // namespace

Prompt sample_examples(const std::vector<Record>& train, const PromptSpec& spec,
                       const Vocabulary& label_resolver, std::string instruction) {
  if (spec.n_examples != 8 && spec.n_examples != 12) {
    throw PromptError("prompt spec '" + spec.prompt_id + "': n_examples must be 8 or 12");
  }
  if (spec.label_count_range && spec.label_count_range->first > spec.label_count_range->second) {
    throw PromptError("prompt spec '" + spec.prompt_id + "': label_count_range is not ordered");
  }
  if (spec.lemma_overlap_range && spec.lemma_overlap_range->first > spec.lemma_overlap_range->second) {
    throw PromptError("prompt spec '" + spec.prompt_id + "': lemma_overlap_range is not ordered");
  }

  struct Candidate {
    std::size_t index;
    std::vector<std::string> labels;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Record& r = train[i];
    if (!r.gold_labels || r.gold_labels->empty()) continue;
    if (!language_matches(spec.language_mode, r.language)) continue;
    if (spec.label_count_range) {
      const auto count = static_cast<int>(r.gold_labels->size());
      if (count < spec.label_count_range->first || count > spec.label_count_range->second) continue;
    }
    auto labels = resolve_labels(r, label_resolver);
    if (spec.lemma_overlap_range) {
      const double ov = lemma_overlap(text_representation(r), labels);
      if (ov < spec.lemma_overlap_range->first || ov > spec.lemma_overlap_range->second) continue;
    }
    candidates.push_back({i, std::move(labels)});
  }

  const auto need = static_cast<std::size_t>(spec.n_examples);
  if (candidates.size() < need) {
    throw PromptError("prompt spec '" + spec.prompt_id + "': only " +
                      std::to_string(candidates.size()) + " training records satisfy the constraints, need " +
                      std::to_string(need));
  }

  DeterministicRng rng(splitmix64(spec.seed ^ fnv1a64(spec.prompt_id)));
  rng.shuffle(candidates);

  Prompt p;
  p.spec = spec;
  p.instruction = std::move(instruction);
  for (std::size_t i = 0; i < need; ++i) {
    p.examples.push_back({text_representation(train[candidates[i].index]), candidates[i].labels});
  }
  return p;
}

std::string render_template(const std::string& template_text,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(template_text.size());
  std::size_t pos = 0;
  while (pos < template_text.size()) {
    const auto open = template_text.find('{', pos);
    if (open == std::string::npos) {
      out.append(template_text, pos, std::string::npos);
      break;
    }
    out.append(template_text, pos, open - pos);
    const auto close = template_text.find('}', open + 1);
    if (close == std::string::npos) {
      throw PromptError("template has an unterminated '{' placeholder");
    }
    const std::string key = template_text.substr(open + 1, close - open - 1);
    const auto it = values.find(key);
    if (it == values.end()) {
      throw PromptError("template has unknown placeholder '{" + key + "}'");
    }
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

std::string assemble_prompt(const Prompt& p, const std::string& query_text,
                            const std::string& template_text) {
  std::string examples;
  for (const auto& ex : p.examples) {
    examples += "Text: " + ex.text + "\nSchlagwörter: ";
    for (std::size_t i = 0; i < ex.labels.size(); ++i) {
      if (i > 0) examples += ", ";
      examples += ex.labels[i];
    }
    examples += "\n\n";
  }
  return render_template(template_text, {{"instruction", p.instruction},
                                         {"examples", examples},
                                         {"query", query_text}});
}

std::vector<PromptSpec> default_prompt_specs(std::uint64_t base_seed) {
  struct Row {
    LanguageMode mode;
    int n;
    std::optional<std::pair<int, int>> labels;
    std::optional<std::pair<double, double>> overlap;
  };
  const std::vector<Row> rows = {
      {LanguageMode::german, 8, {}, {}},
      {LanguageMode::german, 8, {}, {}},
      {LanguageMode::german, 8, {}, {}},
      {LanguageMode::german, 8, {}, {}},
      {LanguageMode::german, 8, {}, {}},
      {LanguageMode::english, 8, {}, {}},
      {LanguageMode::english, 8, {}, {}},
      {LanguageMode::english, 12, {}, {}},
      {LanguageMode::mixed, 8, {}, {}},
      {LanguageMode::mixed, 8, {}, {}},
      {LanguageMode::mixed, 12, {}, {}},
      {LanguageMode::german, 8, {{1, 2}}, {{0.7, 1.0}}},
      {LanguageMode::german, 8, {{1, 2}}, {{0.0, 0.3}}},
      {LanguageMode::german, 8, {{5, 10}}, {{0.7, 1.0}}},
      {LanguageMode::german, 8, {{5, 10}}, {{0.0, 0.3}}},
  };
  std::vector<PromptSpec> specs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    PromptSpec s;
    const auto row_no = i + 1;
    s.prompt_id = (row_no < 10 ? "p0" : "p") + std::to_string(row_no);
    s.language_mode = rows[i].mode;
    s.n_examples = rows[i].n;
    s.label_count_range = rows[i].labels;
    s.lemma_overlap_range = rows[i].overlap;
    s.seed = splitmix64(base_seed + row_no);
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace subtag
