#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "thrnn/error.hpp"
#include "thrnn/tape.hpp"

namespace thrnn {
namespace {

void randomize(Parameter& p, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& v : p.value.data()) v = d(rng);
}

void randomize(GruParams& g, std::mt19937_64& rng) {
  randomize(g.input, rng);
  randomize(g.recurrent, rng);
  randomize(g.bias, rng);
}

TEST(GruCell, MatchesTextbookOracle) {
  std::mt19937_64 rng(3);
  GruParams g("g", 4, 3);
  randomize(g, rng);
  const std::vector<double> x{0.3, -0.7, 0.1, 0.9};
  const std::vector<double> h{0.2, -0.4, 0.6};
  const auto got = gru_cell_forward(x, h, g);
  const auto want = oracle::gru(g.input.value, g.recurrent.value, g.bias.value, x, h);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(got[k], want[k], 1e-14);

  Tape tape;
  const auto v = tape.gru(g, tape.constant(x), tape.constant(h));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(tape.value(v)[k], want[k], 1e-14);
}

TEST(GruCell, ZeroUpdateGateKeepsState) {
  GruParams g("g", 2, 2);
  for (std::size_t k = 2; k < 4; ++k) g.bias.value[k] = -1e3;  // update gate saturated at 0
  const std::vector<double> h{0.5, -0.25};
  const auto out = gru_cell_forward(std::vector<double>{1.0, 1.0}, h, g);
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], -0.25);
}

TEST(SoftmaxXent, MatchesClosedForm) {
  Tape tape;
  const std::vector<double> s{1.0, 2.0, 0.5};
  const auto loss = tape.softmax_xent(tape.constant(s), 1);
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5));
  EXPECT_NEAR(tape.scalar(loss), lse - 2.0, 1e-14);
  EXPECT_EQ(tape.scalar(tape.softmax_xent(tape.constant(s), 1, true)), 0.0);
}

TEST(SoftmaxXent, StableForLargeScores) {
  Tape tape;
  const auto loss = tape.softmax_xent(tape.constant({1000.0, 0.0}), 0);
  EXPECT_NEAR(tape.scalar(loss), std::log1p(std::exp(-1000.0)), 1e-15);
}

TEST(TapeGradients, EmbeddingGruLinearXentMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  Parameter emb("emb", 5, 3), out_w("out.w", 5, 4), out_b("out.b", 5, 1);
  GruParams g("g", 3, 4);
  randomize(emb, rng);
  randomize(out_w, rng);
  randomize(out_b, rng);
  randomize(g, rng);
  auto build = [&](Tape& t) {
    Tape::Var h = t.constant({0.1, -0.2, 0.3, 0.0});
    std::vector<Tape::Var> losses;
    const std::size_t seq[] = {0, 3, 1, 4};
    for (std::size_t i = 0; i + 1 < 4; ++i) {
      h = t.gru(g, t.embedding(emb, seq[i]), h);
      losses.push_back(t.softmax_xent(t.linear(out_w, out_b, h), seq[i + 1]));
    }
    const std::vector<double> w{0.5, 0.25, 1.0};
    return t.weighted_sum(losses, w);
  };
  const auto worst = gradcheck::check({&emb, &out_w, &out_b, &g.input, &g.recurrent, &g.bias}, build);
  EXPECT_LT(worst.rel_error, 1e-5) << worst.where;
}

TEST(TapeGradients, ConcatAndDropoutMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  Parameter a("a", 3, 2), b("b", 2, 3), w("w", 4, 5), bias("bias", 4, 1);
  for (auto* p : {&a, &b, &w, &bias}) randomize(*p, rng);
  auto build = [&](Tape& t) {
    std::mt19937_64 drop(99);  // same mask on every evaluation
    Tape::Var parts[2] = {t.embedding(a, 1), t.embedding(b, 0)};
    Tape::Var x = t.dropout(t.concat(parts), 0.3, drop);
    return t.softmax_xent(t.linear(w, bias, x), 2);
  };
  const auto worst = gradcheck::check({&a, &b, &w, &bias}, build);
  EXPECT_LT(worst.rel_error, 1e-5) << worst.where;
}

TEST(Dropout, IsInvertedAndUnbiased) {
  std::mt19937_64 rng(1);
  Tape tape(false);
  const auto x = tape.constant(std::vector<double>(200000, 1.0));
  const auto y = tape.dropout(x, 0.2, rng);
  double sum = 0.0;
  for (double v : tape.value(y)) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.25) < 1e-15);
    sum += v;
  }
  EXPECT_NEAR(sum / 200000.0, 1.0, 0.01);
  EXPECT_EQ(tape.dropout(x, 0.0, rng).id, x.id);
}

TEST(Tape, RejectsNonFiniteValues) {
  Parameter w("w", 2, 1), b("b", 2, 1);
  w.value[0] = std::numeric_limits<double>::infinity();
  Tape tape;
  EXPECT_THROW(tape.linear(w, b, tape.constant({1.0})), NumericOverflow);
}

TEST(Tape, ShapeMismatchThrows) {
  Parameter w("w", 2, 3), b("b", 2, 1);
  Tape tape;
  EXPECT_THROW(tape.linear(w, b, tape.constant({1.0, 2.0})), ShapeError);
}

TEST(Tape, BackwardWithoutRecordingIsAnError) {
  Tape tape(false);
  const auto x = tape.constant({1.0});
  EXPECT_THROW(tape.backward(x), Error);
}

}  // namespace
}  // namespace thrnn
