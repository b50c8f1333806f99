#include <set>

#include "doctest.h"
#include "dfc/corpus.hpp"
#include "dfc/error.hpp"
#include "dfc/textcore.hpp"

using namespace dfc;

namespace {

std::vector<std::string> texts(std::string_view s) {
  const auto w = word_tokenize(s);
  return word_texts(w);
}

}  // namespace

TEST_CASE("word_tokenize") {
  CHECK(word_tokenize("").empty());
  CHECK(texts("the cat sat") == std::vector<std::string>{"the", "cat", "sat"});
  CHECK(texts("sat.") == std::vector<std::string>{"sat", "."});
  CHECK(texts("  a \t b\n") == std::vector<std::string>{"a", "b"});
  const auto w = word_tokenize("x y");
  CHECK(w[1].index == 1);
}

TEST_CASE("subword training") {
  SUBCASE("single character corpus has no merges") {
    const std::vector<std::string> corpus{"a a a a"};
    const Vocabulary v = train_subwords(corpus, 6);
    CHECK(v.size() == Vocabulary::kSpecialCount + 1);
    CHECK(v.find("a").has_value());
    CHECK(v.merges().empty());
  }
  SUBCASE("most frequent pair is merged first") {
    const std::vector<std::string> corpus{"ab ab ab"};
    const Vocabulary v = train_subwords(corpus, 64);
    REQUIRE(!v.merges().empty());
    CHECK(v.find("ab").has_value());
    CHECK(v.encode_word("ab").size() == 1);
  }
  SUBCASE("deterministic") {
    const std::vector<std::string> corpus{"lu munu pisa", "tikara lu su", "munu munu pa"};
    CHECK(train_subwords(corpus, 40) == train_subwords(corpus, 40));
  }
  SUBCASE("target below the character floor") {
    const std::vector<std::string> corpus{"abcdef"};
    CHECK_THROWS_AS(train_subwords(corpus, 8), Error);
  }
}

TEST_CASE("encode ranks and round trip") {
  const std::vector<std::string> corpus{"lu munu pisa lu sapu .", "mu mimilu nikiru ripi lu munu nulu .",
                                        "tikara lu su ."};
  const Vocabulary v = train_subwords(corpus, 30, 2);
  const auto words = word_tokenize("lu nikiru");
  const auto pieces = encode(words, v);
  std::size_t expected_rank = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0 && pieces[i].parent_word != pieces[i - 1].parent_word) expected_rank = 0;
    CHECK(pieces[i].rank_in_word == expected_rank++);
  }
  CHECK(pieces.front().parent_word == 0);
  CHECK(pieces.back().parent_word == 1);

  // Every word of a generated corpus survives encode then decode.
  LanguageSpec spec{"sa", "A", {"k", "t", "p", "m"}, {"a", "i", "u"}, 20};
  const auto inv = LanguageInventory::build(spec, 5);
  Rng rng(11);
  std::vector<std::string> sentences;
  for (int i = 0; i < 300; ++i) sentences.push_back(inv.generate_sentence(rng));
  const Vocabulary big = train_subwords(sentences, 120);
  for (const auto& s : sentences) {
    const auto w = word_tokenize(s);
    const auto ids = piece_ids(encode(w, big));
    CHECK(decode(ids, big) == normalize(s));
  }
  CHECK(Vocabulary::from_text(big.to_text()) == big);
}

TEST_CASE("decay weights") {
  auto word = [](std::size_t n) {
    std::vector<SubwordPiece> p;
    for (std::size_t i = 0; i < n; ++i) p.push_back({static_cast<int>(10 + i), 0, i});
    return p;
  };
  CHECK(decay_weights(word(0)).empty());
  const auto one = decay_weights(word(1));
  REQUIRE(one.size() == 1);
  CHECK(one[0].weight == 1.0);
  const auto three = decay_weights(word(3));
  REQUIRE(three.size() == 3);
  CHECK(three[0].weight == 1.0);
  CHECK(three[1].weight == 0.5);
  CHECK(three[2].weight == 0.25);
  double sum = 0.0;
  for (const auto& e : decay_weights(word(5))) sum += e.weight;
  CHECK(sum == doctest::Approx(2.0 - std::pow(2.0, -4.0)).epsilon(1e-15));
  CHECK(sum == doctest::Approx(1.9375));
}
