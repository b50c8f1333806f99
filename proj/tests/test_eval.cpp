#include <atomic>

#include "doctest.h"
#include "dfc/error.hpp"
#include "dfc/eval.hpp"
#include "dfc/rng.hpp"
#include "dfc/textcore.hpp"
#include "oracles.hpp"

using namespace dfc;
using Strings = std::vector<std::string>;

TEST_CASE("BLEU") {
  const Strings same{"the cat sat on the mat", "a b c d e"};
  CHECK(bleu(same, same) == doctest::Approx(100.0));
  CHECK(bleu(Strings{"a b c d"}, Strings{"a b c e"}) == 0.0);

  const Strings hyp{"a b c d", "the cat sat on the mat"};
  const Strings ref{"a b c e", "the cat sat on the mat"};
  // Matches per order: 9/10, 7/8, 5/6, 3/4; equal lengths.
  const double hand = 100.0 * std::pow(0.9 * 0.875 * (5.0 / 6.0) * 0.75, 0.25);
  CHECK(bleu(hyp, ref) == doctest::Approx(hand).epsilon(1e-12));
  CHECK(bleu(hyp, ref) == doctest::Approx(oracle::bleu(hyp, ref)).epsilon(1e-12));
  CHECK(bleu(hyp, ref) == doctest::Approx(83.76).epsilon(1e-4));

  const Strings short_hyp{"the cat", "b c d e f"};
  const Strings long_ref{"the cat sat", "b c d e f g"};
  CHECK(bleu(short_hyp, long_ref) == doctest::Approx(oracle::bleu(short_hyp, long_ref)).epsilon(1e-12));
  CHECK_THROWS_AS(bleu(hyp, Strings{"x"}), Error);
}

TEST_CASE("chrF2") {
  CHECK(sentence_chrf2("the cat", "the cat") == doctest::Approx(100.0));
  CHECK(sentence_chrf2("abc", "xyz") == 0.0);
  // Orders 1..3 exist on both sides: F = 2/3, 1/2, 0.
  CHECK(sentence_chrf2("abc", "abd") == doctest::Approx(100.0 * (2.0 / 3.0 + 0.5) / 3.0).epsilon(1e-12));
  CHECK(sentence_chrf2("abc", "abd") == doctest::Approx(38.89).epsilon(1e-4));
  for (const auto& [h, r] : std::vector<std::pair<std::string, std::string>>{
           {"the cat sat", "the cat sat down"}, {"kitten", "sitting"}, {"ab ab", "ba ba"}}) {
    CHECK(sentence_chrf2(h, r) == doctest::Approx(oracle::chrf2(h, r)).epsilon(1e-12));
  }
}

TEST_CASE("TER") {
  auto words = [](const std::string& s) { return oracle::split(s); };
  CHECK(ter(Strings{"a b c"}, Strings{"a b c"}) == 0.0);
  CHECK(ter(Strings{"a b c"}, Strings{"a x c"}) == doctest::Approx(100.0 / 3.0));
  CHECK(ter(Strings{"c a b"}, Strings{"a b c"}) == doctest::Approx(100.0 / 3.0));
  CHECK(oracle::min_shift_edits(words("c a b"), words("a b c"), 2) == 1.0);
  CHECK(oracle::min_shift_edits(words("a b c"), words("a x c"), 2) == 1.0);
  CHECK_THROWS_AS(ter(Strings{"a"}, Strings{""}), Error);

  // Greedy shifting never beats the exhaustive optimum on tiny inputs.
  Rng rng(2);
  const Strings alphabet{"a", "b", "c"};
  for (int trial = 0; trial < 60; ++trial) {
    Strings h, r;
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) h.push_back(alphabet[rng.below(3)]);
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) r.push_back(alphabet[rng.below(3)]);
    const auto s = ter_sentence(h, r);
    CHECK(s.edits >= oracle::min_shift_edits(h, r, 2));
    CHECK(s.edits <= static_cast<double>(oracle::edit_distance(h, r)));
  }
}

TEST_CASE("tagging metrics") {
  const std::vector<std::vector<int>> gold{{1, 1, 0}};
  const auto perfect = tagging_metrics(gold, gold);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.sentence_accuracy == 1.0);

  const std::vector<std::vector<int>> pred{{1, 0, 0}};
  const auto m = tagging_metrics(pred, gold);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 0.5);
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.sentence_accuracy == 0.0);

  const std::vector<std::vector<int>> none{{0, 0, 0}};
  const auto z = tagging_metrics(none, gold);
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK_THROWS_AS(tagging_metrics(std::vector<std::vector<int>>{{1}}, gold), Error);
}

TEST_CASE("metrics report") {
  const Strings s{"lu munu pisa .", "ka ti ."};
  const auto m = evaluate_corpus(s, s);
  CHECK(m.bleu == doctest::Approx(100.0));
  CHECK(m.chrf2 == doctest::Approx(100.0));
  CHECK(m.ter == 0.0);
  const auto back = metrics_from_json(to_json(m));
  CHECK(back.bleu == m.bleu);
  CHECK(back.n_sentences == 2);
}

namespace {

class FailingJudge final : public JudgeBackend {
 public:
  std::string name() const override { return "failing"; }
  Preference compare(const JudgeItem&) override { fail(ErrorKind::backend, "unreachable"); }
};

}  // namespace

TEST_CASE("pairwise judge") {
  const Strings refs{"the cat sat", "a dog ran", "we go home"};
  const Strings close{"the cat sat", "a dog ran far", "we go home"};
  const Strings far{"cat", "dog", "home now please"};
  OracleJudge oracle_judge;
  PositionBiasedJudge biased;

  const auto same = judge_pairwise(close, close, refs, oracle_judge);
  CHECK(same.draw_pct == 100.0);
  const auto win = judge_pairwise(close, far, refs, oracle_judge);
  CHECK(win.a_win_pct == 100.0);
  const auto lose = judge_pairwise(far, close, refs, oracle_judge);
  CHECK(lose.b_win_pct == 100.0);
  const auto bias = judge_pairwise(close, far, refs, biased);
  CHECK(bias.draw_pct == 100.0);
  CHECK(judge_pairwise(close, far, refs, biased, {}, 3).draw_pct == 100.0);

  FailingJudge failing;
  const auto f = judge_pairwise(close, far, refs, failing);
  CHECK(f.draw_pct == 100.0);
  CHECK(f.failures == 3);
  CHECK_THROWS_AS(judge_pairwise(close, Strings{"x"}, refs, oracle_judge), Error);
  CHECK_THROWS_AS(make_judge("nope", {}), Error);
}
