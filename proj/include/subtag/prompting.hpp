#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subtag/corpus.hpp"
#include "subtag/vocabulary.hpp"

namespace subtag {

enum class LanguageMode { german, english, mixed };

std::string_view to_string(LanguageMode m);
LanguageMode parse_language_mode(std::string_view s);

/// Recipe for one few-shot example set: the language filter, how many
/// examples, and optional bounds on the examples' label counts and
/// text/label lemma overlap.
struct PromptSpec {
  std::string prompt_id;
  LanguageMode language_mode = LanguageMode::german;
  int n_examples = 8;
  std::optional<std::pair<int, int>> label_count_range;
  std::optional<std::pair<double, double>> lemma_overlap_range;
  std::uint64_t seed = 0;
};

struct PromptExample {
  std::string text;
  std::vector<std::string> labels;  // German label strings
};

struct Prompt {
  PromptSpec spec;
  std::string instruction;
  std::vector<PromptExample> examples;
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conversation openers for the two LLM stages. German on purpose: the gold
/// subject terms shown in the examples are German, and the generators follow
/// the demonstrations.
inline constexpr std::string_view kCompleteInstruction =
    "Dies ist eine Unterhaltung zwischen einem intelligenten, hilfsbereitem KI-Assistenten "
    "und einem Nutzer. Der Assistent antwortet mit Schlagwörtern auf den Text des Nutzers.";

inline constexpr std::string_view kRankInstruction =
    "Du erhälst einen Text und ein Schlagwort. Bewerte auf einer Skala von 1 bis 10, "
    "wie gut das Schlagwort zu dem Text passt. Nenne keine Begründungen. "
    "Gib nur die Zahl zwischen 1 und 10 zurück.";

/// Fraction of labels whose normalized tokens all occur among the text's
/// normalized tokens (lowercase, punctuation stripped). A containment proxy
/// for lemma overlap; no lemmatizer involved. Throws on an empty label list.
double lemma_overlap(const std::string& text, const std::vector<std::string>& labels);

/// Draws spec.n_examples training records without replacement, honoring the
/// spec's language filter and label-count / lemma-overlap bounds. Gold label
/// ids are rendered through the vocabulary's German preferred labels.
/// Deterministic for identical (train, spec). Throws PromptError when fewer
/// records match than requested.
Prompt sample_examples(const std::vector<Record>& train, const PromptSpec& spec,
                       const Vocabulary& label_resolver,
                       std::string instruction = std::string(kCompleteInstruction));

/// Substitutes {placeholder} slots in a template. Only the given keys are
/// legal; any other {word} slot raises PromptError.
std::string render_template(const std::string& template_text,
                            const std::map<std::string, std::string>& values);

/// Renders instruction, the example block (text -> comma-joined labels) and
/// the query into a template with {instruction}, {examples} and {query}
/// placeholders.
std::string assemble_prompt(const Prompt& p, const std::string& query_text,
                            const std::string& template_text);

/// The fifteen stock prompt recipes: five German and three English and three
/// mixed unconstrained rows (8 or 12 examples), plus four German rows
/// crossing label counts 1-2 / 5-10 with lemma overlap 0.7-1 / 0-0.3.
std::vector<PromptSpec> default_prompt_specs(std::uint64_t base_seed);

}  // namespace subtag
