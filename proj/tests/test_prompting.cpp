#include <doctest.h>

#include <set>

#include "subtag/prompting.hpp"
#include "subtag/text.hpp"

using namespace subtag;

namespace {

Vocabulary label_vocab() {
  Vocabulary v;
  v.add({"g1", "Geschichte", {}, true});
  v.add({"g2", "Politik", {}, true});
  v.add({"g3", "Kultur", {}, true});
  v.add({"g4", "Wirtschaft", {}, true});
  v.add({"g5", "Musik", {}, true});
  return v;
}

Record train_record(std::string id, Language lang, std::string title,
                    std::vector<std::string> gold) {
  Record r;
  r.id = std::move(id);
  r.title = std::move(title);
  r.language = lang;
  r.record_type = RecordType::Book;
  r.gold_labels = std::move(gold);
  return r;
}

/// 10 German records whose single gold label appears verbatim in the title
/// (overlap 1), 10 German records whose label does not (overlap 0), and 14
/// English records.
std::vector<Record> training_pool() {
  std::vector<Record> train;
  const char* labels[] = {"Geschichte", "Politik", "Kultur", "Wirtschaft", "Musik"};
  const char* ids[] = {"g1", "g2", "g3", "g4", "g5"};
  for (int i = 0; i < 10; ++i) {
    train.push_back(train_record("de-hit-" + std::to_string(i), Language::de,
                                 "Studie " + std::to_string(i) + " zu " + labels[i % 5],
                                 {ids[i % 5]}));
  }
  for (int i = 0; i < 10; ++i) {
    train.push_back(train_record("de-miss-" + std::to_string(i), Language::de,
                                 "Abhandlung Nummer " + std::to_string(i), {ids[(i + 1) % 5]}));
  }
  for (int i = 0; i < 14; ++i) {
    train.push_back(train_record("en-" + std::to_string(i), Language::en,
                                 "Essay number " + std::to_string(i), {ids[i % 5]}));
  }
  return train;
}

}  // namespace

TEST_SUITE("prompting") {

TEST_CASE("lemma_overlap counts fully contained labels") {
  CHECK(lemma_overlap("deep learning for vision", {"deep learning", "chemistry"}) ==
        doctest::Approx(0.5));
  CHECK(lemma_overlap("alpha beta gamma", {"alpha", "beta gamma", "gamma alpha"}) ==
        doctest::Approx(1.0));
  CHECK(lemma_overlap("alpha beta", {"delta", "epsilon"}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(lemma_overlap("text", {}), PromptError);
}

TEST_CASE("lemma_overlap normalizes case and punctuation") {
  CHECK(lemma_overlap("Deep Learning, for Vision!", {"deep learning"}) == doctest::Approx(1.0));
}

TEST_CASE("sample_examples respects language and count") {
  const auto vocab = label_vocab();
  const auto train = training_pool();

  PromptSpec spec;
  spec.prompt_id = "en12";
  spec.language_mode = LanguageMode::english;
  spec.n_examples = 12;
  spec.seed = 3;
  const auto prompt = sample_examples(train, spec, vocab);
  REQUIRE(prompt.examples.size() == 12);
  for (const auto& ex : prompt.examples) {
    CHECK(ex.text.rfind("Essay", 0) == 0);
  }
}

TEST_CASE("sample_examples honors label-count and overlap constraints") {
  const auto vocab = label_vocab();
  const auto train = training_pool();

  PromptSpec spec;
  spec.prompt_id = "row12";
  spec.language_mode = LanguageMode::german;
  spec.n_examples = 8;
  spec.label_count_range = {{1, 2}};
  spec.lemma_overlap_range = {{0.7, 1.0}};
  spec.seed = 9;
  const auto prompt = sample_examples(train, spec, vocab);
  REQUIRE(prompt.examples.size() == 8);
  for (const auto& ex : prompt.examples) {
    CHECK(ex.labels.size() >= 1);
    CHECK(ex.labels.size() <= 2);
    CHECK(lemma_overlap(ex.text, ex.labels) >= 0.7);
  }
}

TEST_CASE("sample_examples fails on infeasible constraints") {
  const auto vocab = label_vocab();
  std::vector<Record> tiny = {training_pool()[0], training_pool()[1], training_pool()[2]};
  PromptSpec spec;
  spec.prompt_id = "small";
  spec.language_mode = LanguageMode::german;
  spec.n_examples = 8;
  CHECK_THROWS_AS(sample_examples(tiny, spec, vocab), PromptError);
}

TEST_CASE("sample_examples is deterministic and draws without replacement") {
  const auto vocab = label_vocab();
  const auto train = training_pool();
  PromptSpec spec;
  spec.prompt_id = "det";
  spec.language_mode = LanguageMode::mixed;
  spec.n_examples = 12;
  spec.seed = 21;
  const auto a = sample_examples(train, spec, vocab);
  const auto b = sample_examples(train, spec, vocab);
  REQUIRE(a.examples.size() == b.examples.size());
  std::set<std::string> texts;
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].text == b.examples[i].text);
    CHECK(texts.insert(a.examples[i].text).second);
  }
}

TEST_CASE("assemble_prompt renders instruction, examples and query in order") {
  Prompt p;
  p.instruction = "INSTR";
  p.examples = {{"t1", {"a", "b"}}};
  const std::string templ = "{instruction}\n\n{examples}Text: {query}\nSchlagwörter:";
  const auto rendered = assemble_prompt(p, "q", templ);
  const auto pos_instr = rendered.find("INSTR");
  const auto pos_text = rendered.find("t1");
  const auto pos_labels = rendered.find("a, b");
  const auto pos_query = rendered.find("Text: q");
  REQUIRE(pos_instr != std::string::npos);
  REQUIRE(pos_text != std::string::npos);
  REQUIRE(pos_labels != std::string::npos);
  REQUIRE(pos_query != std::string::npos);
  CHECK(pos_instr < pos_text);
  CHECK(pos_text < pos_labels);
  CHECK(pos_labels < pos_query);
}

TEST_CASE("assemble_prompt with zero examples renders instruction and query only") {
  Prompt p;
  p.instruction = "INSTR";
  const auto rendered = assemble_prompt(p, "q", "{instruction}|{examples}|{query}");
  CHECK(rendered == "INSTR||q");
}

TEST_CASE("assemble_prompt rejects stray placeholders") {
  Prompt p;
  p.instruction = "i";
  CHECK_THROWS_WITH_AS(assemble_prompt(p, "q", "{instruction} {bogus} {query}"),
                       doctest::Contains("bogus"), PromptError);
}

TEST_CASE("prompt length grows with example count") {
  const auto vocab = label_vocab();
  const auto train = training_pool();
  const std::string templ = "{instruction}\n{examples}{query}";
  PromptSpec spec;
  spec.prompt_id = "len";
  spec.language_mode = LanguageMode::mixed;
  spec.seed = 4;
  spec.n_examples = 8;
  const auto small = assemble_prompt(sample_examples(train, spec, vocab), "q", templ);
  spec.n_examples = 12;
  const auto large = assemble_prompt(sample_examples(train, spec, vocab), "q", templ);
  CHECK(large.size() > small.size());
}

TEST_CASE("default prompt specs mirror the stock recipe table") {
  const auto specs = default_prompt_specs(1);
  REQUIRE(specs.size() == 15);
  for (int i = 0; i < 5; ++i) {
    CHECK(specs[i].language_mode == LanguageMode::german);
    CHECK(specs[i].n_examples == 8);
    CHECK_FALSE(specs[i].label_count_range.has_value());
    CHECK_FALSE(specs[i].lemma_overlap_range.has_value());
  }
  CHECK(specs[5].language_mode == LanguageMode::english);
  CHECK(specs[6].language_mode == LanguageMode::english);
  CHECK(specs[7].language_mode == LanguageMode::english);
  CHECK(specs[7].n_examples == 12);
  CHECK(specs[8].language_mode == LanguageMode::mixed);
  CHECK(specs[9].language_mode == LanguageMode::mixed);
  CHECK(specs[10].language_mode == LanguageMode::mixed);
  CHECK(specs[10].n_examples == 12);
  CHECK(specs[11].label_count_range == std::pair{1, 2});
  CHECK(specs[11].lemma_overlap_range == std::pair{0.7, 1.0});
  CHECK(specs[12].label_count_range == std::pair{1, 2});
  CHECK(specs[12].lemma_overlap_range == std::pair{0.0, 0.3});
  CHECK(specs[13].label_count_range == std::pair{5, 10});
  CHECK(specs[13].lemma_overlap_range == std::pair{0.7, 1.0});
  CHECK(specs[14].label_count_range == std::pair{5, 10});
  CHECK(specs[14].lemma_overlap_range == std::pair{0.0, 0.3});
  std::set<std::string> ids;
  for (const auto& s : specs) CHECK(ids.insert(s.prompt_id).second);
}

}  // TEST_SUITE
