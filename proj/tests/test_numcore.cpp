#include <filesystem>

#include "doctest.h"
#include "dfc/error.hpp"
#include "dfc/model.hpp"
#include "dfc/num/checkpoint.hpp"
#include "dfc/num/gradcheck.hpp"
#include "dfc/num/ops.hpp"
#include "dfc/num/optim.hpp"
#include "dfc/num/schedule.hpp"

using namespace dfc;
using namespace dfc::num;

TEST_CASE("tensor ops") {
  const Matrix<double> z = Matrix<double>::Zero(1, 4);
  const Matrix<double> p = softmax_rows(z);
  for (Index j = 0; j < 4; ++j) CHECK(p(0, j) == doctest::Approx(0.25).epsilon(1e-15));

  Tape<double> tape(false);
  Matrix<double> a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  const auto x = tape.constant(a);
  const auto id = tape.constant(Matrix<double>::Identity(3, 3));
  CHECK(matmul(x, id).value() == a);

  try {
    matmul(x, x);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape);
    CHECK(std::string(e.what()).find("(2, 3)") != std::string::npos);
  }
}

TEST_CASE("autograd") {
  ParameterSet<double> ps;
  auto& x = ps.add("x", 1, 1, false);
  x.value(0, 0) = 3.0;
  {
    Tape<double> tape;
    const auto v = tape.parameter(x);
    tape.backward(matmul(v, v));
  }
  CHECK(x.grad(0, 0) == doctest::Approx(6.0));

  ps.zero_grad();
  {
    Tape<double> tape;
    const auto v = tape.parameter(x);
    tape.backward(add(scale(v, 0.0), tape.constant(Matrix<double>::Constant(1, 1, 2.0))));
  }
  CHECK(x.grad(0, 0) == 0.0);

  Tape<double> tape;
  const auto v = tape.parameter(x);
  CHECK_THROWS_AS(tape.backward(tape.constant(Matrix<double>::Zero(2, 1))), Error);
  (void)v;
}

TEST_CASE("causal attention ignores later tokens") {
  TransformerConfig c;
  c.vocab_size = 20;
  c.blocks = 2;
  c.width = 16;
  c.heads = 4;
  c.ff = 32;
  c.max_seq_len = 16;
  CorrectorModel<double> m(c);
  m.initialize(4);
  std::vector<int> ids{1, 7, 9, 11, 6, 8};
  const Matrix<double> base = m.next_token_distributions(ids);
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    std::vector<int> changed = ids;
    changed[t + 1] = changed[t + 1] == 5 ? 6 : 5;
    const Matrix<double> after = m.next_token_distributions(changed);
    for (Index r = 0; r <= static_cast<Index>(t); ++r) CHECK((after.row(r) - base.row(r)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((after.row(static_cast<Index>(t + 1)) - base.row(static_cast<Index>(t + 1))).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("gradcheck of a small network") {
  ParameterSet<double> ps;
  auto& w = ps.add("w", 3, 4, true);
  auto& g = ps.add("g", 1, 4, false);
  auto& b = ps.add("b", 1, 4, false);
  initialize_parameters(ps, 0.5, 9);
  g.value.setConstant(1.0);
  b.value.setRandom();
  Matrix<double> in(5, 3);
  in.setRandom();
  auto loss = [&](bool record) {
    Tape<double> tape(record);
    auto h = gelu(layer_norm(matmul(tape.constant(in), tape.parameter(w)), tape.parameter(g), tape.parameter(b)));
    auto y = self_attention(matmul(h, tape.constant(Matrix<double>::Ones(4, 12) * 0.1)), 2, true);
    auto s = matmul(matmul(tape.constant(Matrix<double>::Ones(1, 5)), y), tape.constant(Matrix<double>::Ones(4, 1)));
    auto out = matmul(s, s);
    if (record) tape.backward(out);
    return out.value()(0, 0);
  };
  ps.zero_grad();
  loss(true);
  const auto r = gradcheck(ps, [&] { return loss(false); });
  CHECK(r.checked == 20);
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("AdamW") {
  ParameterSet<double> ps;
  auto& p = ps.add("p", 1, 3, true);
  p.value << 0.5, -1.0, 2.0;
  AdamWConfig cfg;

  SUBCASE("zero gradient and no decay") {
    cfg.weight_decay = 0.0;
    AdamW<double> opt(ps, cfg);
    const Matrix<double> before = p.value;
    opt.step(0.1);
    CHECK(p.value == before);
  }
  SUBCASE("first step moves by lr against the gradient sign") {
    cfg.weight_decay = 0.0;
    AdamW<double> opt(ps, cfg);
    const Matrix<double> before = p.value;
    p.grad << 0.3, -2.0, 1e-3;
    opt.step(0.01);
    for (Index j = 0; j < 3; ++j) {
      const double gj = p.grad(0, j);
      const double expected = -0.01 * gj / (std::abs(gj) + cfg.eps);
      CHECK(p.value(0, j) - before(0, j) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  SUBCASE("decoupled decay") {
    AdamW<double> opt(ps, cfg);
    const Matrix<double> before = p.value;
    opt.step(0.1);
    CHECK(p.value(0, 0) == doctest::Approx(before(0, 0) * (1.0 - 0.1 * cfg.weight_decay)));
  }
  SUBCASE("negative learning rate") {
    AdamW<double> opt(ps, cfg);
    CHECK_THROWS_AS(opt.step(-1.0), Error);
  }
  SUBCASE("bit-identical runs") {
    auto run = [&] {
      ParameterSet<double> q;
      auto& x = q.add("x", 2, 2, true);
      x.value << 1, 2, 3, 4;
      AdamW<double> opt(q, cfg);
      for (int i = 0; i < 10; ++i) {
        x.grad = x.value * 0.3;
        x.grad(0, 1) += 0.1 * i;
        opt.step(0.05);
      }
      return Matrix<double>(x.value);
    };
    CHECK(run() == run());
  }
}

TEST_CASE("schedule") {
  const Schedule lam{0.3, 0.1, 100, ScheduleShape::constant_after_warmup};
  CHECK(lam.warmup_steps() == 10);
  CHECK(lam.value(0) == 0.0);
  CHECK(lam.value(5) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(lam.value(10) == 0.3);
  CHECK(lam.value(99) == 0.3);
  CHECK_THROWS_AS(lam.value(101), Error);

  const Schedule lr{1e-3, 0.1, 100, ScheduleShape::cosine_decay};
  CHECK(lr.value(10) == doctest::Approx(1e-3));
  CHECK(lr.value(55) == doctest::Approx(0.5e-3));
  CHECK(lr.value(100) == doctest::Approx(0.0));
  for (std::size_t s = 11; s <= 100; ++s) CHECK(lr.value(s) <= lr.value(s - 1));
}

TEST_CASE("checkpoint round trip") {
  TransformerConfig c = default_tagger_config(40);
  c.max_seq_len = 16;
  CorrectorModel<float> a(c);
  a.initialize(3);
  const auto dir = std::filesystem::temp_directory_path() / "dfc_test_checkpoint";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "m", a.parameters(), c, "vocab.txt");

  CorrectorModel<float> b(c);
  b.initialize(99);
  const auto manifest = load_checkpoint(dir / "m", b.parameters());
  CHECK(manifest.at("vocab") == "vocab.txt");
  const std::vector<int> ids{1, 8, 9, 30, 4};
  CHECK(a.next_token_distributions(ids) == b.next_token_distributions(ids));

  TransformerConfig other = c;
  other.width = 32;
  other.heads = 4;
  CorrectorModel<float> wrong(other);
  CHECK_THROWS_AS(load_checkpoint(dir / "m", wrong.parameters()), Error);
  std::filesystem::remove_all(dir);
}
