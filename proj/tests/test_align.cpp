#include <algorithm>

#include "doctest.h"
#include "dfc/align.hpp"
#include "dfc/corpus.hpp"
#include "dfc/error.hpp"
#include "dfc/pipeline.hpp"
#include "oracles.hpp"

using namespace dfc;

using Words = std::vector<std::string>;

TEST_CASE("align_and_label") {
  CHECK(align_and_label(Words{"a", "b"}, Words{"a", "b"}).labels == std::vector<int>{0, 0});
  CHECK(align_and_label(Words{"a", "b"}, Words{}).labels == std::vector<int>{1, 1});
  CHECK(align_and_label(Words{"uh", "the", "the", "cat"}, Words{"the", "cat"}).labels == std::vector<int>{1, 1, 0, 0});

  // Random small cases against exhaustive enumeration.
  Rng rng(21);
  const Words alphabet{"a", "b", "c"};
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    Words fluent;
    const auto nf = 1 + rng.below(5);
    for (std::size_t i = 0; i < nf; ++i) fluent.push_back(alphabet[rng.below(3)]);
    Words dis;
    for (const auto& w : fluent) {
      while (rng.bernoulli(0.3)) dis.push_back(alphabet[rng.below(3)]);
      dis.push_back(w);
    }
    while (rng.bernoulli(0.3)) dis.push_back(alphabet[rng.below(3)]);
    if (dis.size() > 14) continue;
    const auto expected = oracle::rightmost_labels(dis, fluent);
    REQUIRE(expected.has_value());
    const auto got = align_and_label(dis, fluent);
    CHECK(got.fluent_is_subsequence);
    CHECK(got.labels == *expected);
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("subword label projection") {
  const std::vector<SubwordPiece> pieces{{10, 0, 0}, {11, 0, 1}, {12, 0, 2}, {13, 1, 0}};
  CHECK(project_labels_to_subwords(std::vector<int>{1, 0}, pieces) == std::vector<int>{1, 1, 1, 0});
  CHECK(project_labels_to_subwords(std::vector<int>{0, 0}, pieces) == std::vector<int>{0, 0, 0, 0});
  CHECK_THROWS_AS(project_labels_to_subwords(std::vector<int>{1}, pieces), Error);

  // Per-word constancy over a generated labeled corpus.
  const PipelineConfig cfg;
  CorpusConfig cc = cfg.corpus();
  cc.sentences_per_language = 3334;
  const auto pairs = generate_corpus(cc, cfg.injection());
  std::vector<std::string> text;
  for (std::size_t i = 0; i < 600; ++i) text.push_back(pairs[i].disfluent);
  const Vocabulary vocab = train_subwords(text, 300);
  std::size_t violations = 0;
  for (const auto& p : pairs) {
    const LabeledExample ex = label_pair(p, vocab);
    const auto pieces = encode(ex.tokens, vocab);
    REQUIRE(pieces.size() == ex.subword_labels.size());
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      if (ex.subword_labels[k] != ex.labels[pieces[k].parent_word]) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("penalty set") {
  const std::vector<std::string> corpus{"the the the cat cat cat sat sat uh"};
  const Vocabulary vocab = train_subwords(corpus, 14, 2);
  SentencePair pair{"p", "sa", "the cat", "uh the the cat", {}};
  LabeledExample ex = label_pair(pair, vocab);
  REQUIRE(ex.labels == std::vector<int>{1, 1, 0, 0});

  SUBCASE("no disfluent tokens") {
    LabeledExample clean = ex;
    clean.labels.assign(4, 0);
    CHECK(extract_penalty_set(clean, vocab, true).empty());
  }
  SUBCASE("reference words are excluded") {
    const auto ps = extract_penalty_set(ex, vocab, true);
    CHECK(ps.source_words == std::vector<std::string>{"uh"});
  }
  SUBCASE("flag off keeps every label-1 type with decayed weights") {
    const auto uh = encode(word_tokenize("uh"), vocab);
    const auto the = encode(word_tokenize("the"), vocab);
    REQUIRE(uh.size() == 2);
    std::vector<DecayedPenaltyEntry> expected = decay_weights(uh);
    for (const auto& e : decay_weights(the)) {
      auto it = std::find_if(expected.begin(), expected.end(), [&](const auto& x) { return x.token_id == e.token_id; });
      if (it == expected.end()) {
        expected.push_back(e);
      } else {
        it->weight = std::max(it->weight, e.weight);
      }
    }
    const auto ps = extract_penalty_set(ex, vocab, false);
    CHECK(ps.entries == expected);
    CHECK(ps.entries[0].weight == 1.0);
    CHECK(ps.entries[1].weight == 0.5);
  }
}
