#include <gtest/gtest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "support/hrnn_reference.hpp"
#include "support/tiny_model.hpp"
#include "thrnn/error.hpp"
#include "thrnn/model.hpp"

namespace thrnn {
namespace {

TEST(ModelGradients, EveryArrayMatchesFiniteDifferences) {
  for (double alpha : {1.0, 0.5}) {
    auto s = tiny::make(alpha);
    const auto worst = gradcheck::check(s.params.all(), [&](Tape& t) { return tiny::loss(t, s); });
    EXPECT_LT(worst.rel_error, 1e-4) << worst.where << " alpha " << alpha;
  }
}

TEST(ModelGradients, EveryArrayReceivesGradient) {
  auto s = tiny::make();
  s.params.zero_grad();
  Tape tape;
  tape.backward(tiny::loss(tape, s));
  for (const auto* p : s.params.all()) {
    double norm = 0.0;
    for (double g : p->grad.data()) norm += g * g;
    EXPECT_GT(norm, 0.0) << p->name;
  }
}

TEST(Model, InferencePathMatchesTape) {
  auto s = tiny::make();
  for (const auto& ex : s.batch) {
    Tape tape(false);
    const auto fr = forward(tape, ex, s.params, s.cfg);
    const auto h = inter_state(s.params, s.cfg, ex.user, ex.history);
    for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(h[k], tape.value(fr.inter_state)[k], 1e-15);
    const std::vector<ItemIndex> inputs(ex.items.begin(), ex.items.end() - 1);
    const auto pass = run_session(s.params, s.cfg, h, inputs);
    ASSERT_EQ(pass.scores.size(), fr.scores.size());
    for (std::size_t t = 0; t < pass.scores.size(); ++t)
      for (std::size_t n = 0; n < s.cfg.num_items; ++n) EXPECT_NEAR(pass.scores[t][n], tape.value(fr.scores[t])[n], 1e-14);
  }
}

TEST(Model, DisabledContextIsAPlainHierarchicalGru) {
  auto s = tiny::make();
  s.cfg.context_embeddings = false;
  for (const auto& ex : s.batch) {
    std::vector<std::vector<double>> past;
    for (const auto& e : ex.history) past.push_back(e.session_state);
    const auto want = reference::hrnn_scores(s.params, s.cfg, past, ex.items);
    const auto h = inter_state(s.params, s.cfg, ex.user, ex.history);
    const auto got = run_session(s.params, s.cfg, h, ex.items);
    for (std::size_t t = 0; t < want.size(); ++t)
      for (std::size_t n = 0; n < s.cfg.num_items; ++n) EXPECT_NEAR(got.scores[t][n], want[t][n], 1e-12);
  }
}

TEST(Model, OnlyTheMostRecentRepresentationsAreUsed) {
  auto s = tiny::make();
  auto ex = s.batch[0];
  const auto h = inter_state(s.params, s.cfg, ex.user, ex.history);
  ex.history.insert(ex.history.begin(), HistoryEntry{{9.0, 9.0, 9.0, 9.0}, 2});
  EXPECT_EQ(inter_state(s.params, s.cfg, ex.user, ex.history), h);
}

TEST(Model, JointLossIsTheWeightedMeanOfParts) {
  auto s = tiny::make();
  s.cfg.loss_weight_time = 0.3;
  s.cfg.loss_weight_rec = 0.6;
  Tape tape(false);
  std::vector<ForwardResult> results;
  for (const auto& ex : s.batch) results.push_back(forward(tape, ex, s.params, s.cfg));
  LossParts parts;
  const auto total = joint_loss(tape, results, s.batch, s.params, s.cfg, &parts);
  EXPECT_EQ(parts.rec_count, 5u);
  EXPECT_EQ(parts.time_count, 2u);

  double rec = 0.0;
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t t = 0; t < results[e].scores.size(); ++t) {
      const auto sc = tape.value(results[e].scores[t]);
      double lse = 0.0;
      for (double v : sc) lse += std::exp(v);
      rec += std::log(lse) - sc[s.batch[e].items[t + 1]];
    }
  }
  double time = 0.0;
  for (std::size_t e = 0; e < 2; ++e) {
    const auto h = tape.value(results[e].inter_state);
    time += time_loss(h, s.batch[e].gap_target, s.params.time.values(), s.cfg.time_loss());
  }
  EXPECT_NEAR(parts.rec, rec / 5.0, 1e-12);
  EXPECT_NEAR(parts.time, time / 2.0, 1e-12);
  EXPECT_NEAR(tape.scalar(total), 0.6 * rec / 5.0 + 0.3 * time / 2.0, 1e-12);
}

TEST(Model, MaskedGapsAreExcludedFromTheTimeLoss) {
  auto s = tiny::make();
  s.batch[1].gap_masked = true;
  Tape tape(false);
  std::vector<ForwardResult> results;
  for (const auto& ex : s.batch) results.push_back(forward(tape, ex, s.params, s.cfg));
  LossParts parts;
  joint_loss(tape, results, s.batch, s.params, s.cfg, &parts);
  EXPECT_EQ(parts.time_count, 1u);
}

TEST(Model, InitialisationIsSeededAndBounded) {
  ModelConfig cfg;
  cfg.num_items = 50;
  cfg.num_users = 7;
  const auto a = ModelParams::initialize(cfg, 3);
  const auto b = ModelParams::initialize(cfg, 3);
  const auto c = ModelParams::initialize(cfg, 4);
  EXPECT_EQ(a.output_weight.value, b.output_weight.value);
  EXPECT_NE(a.output_weight.value, c.output_weight.value);
  const double limit = std::sqrt(6.0 / (100.0 + 50.0));
  for (double v : a.output_weight.value.data()) EXPECT_LE(std::abs(v), limit);
  for (double v : a.item_embedding.value.data()) EXPECT_LE(std::abs(v), 0.05);
  for (double v : a.output_bias.value.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(a.time.w.value[0], -0.1);
  cfg.context_embeddings = false;
  const auto off = ModelParams::initialize(cfg, 3);
  for (double v : off.user_embedding.value.data()) EXPECT_EQ(v, 0.0);
}

TEST(Model, ConfigValidation) {
  ModelConfig cfg;
  cfg.num_items = 10;
  cfg.num_users = 2;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.hidden_dim_intra = 50;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.alpha_exp = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.dropout_rate = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.max_session_reps = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.loss_weight_time = -0.1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Ranking, TopKBreaksTiesTowardsLowerIndex) {
  const std::vector<double> s{0.5, 2.0, 2.0, -1.0, 0.5};
  EXPECT_EQ(top_k(s, 3), (std::vector<ItemIndex>{1, 2, 0}));
  EXPECT_EQ(top_k(s, 10).size(), 5u);
  EXPECT_EQ(rank_of(s, 1), 1u);
  EXPECT_EQ(rank_of(s, 2), 1u);
  EXPECT_EQ(rank_of(s, 4), 3u);
  EXPECT_EQ(rank_of(s, 3), 5u);
}

TEST(Model, UnknownItemIsRejected) {
  auto s = tiny::make();
  const std::vector<double> h(4, 0.0);
  EXPECT_THROW(run_session(s.params, s.cfg, h, std::vector<ItemIndex>{6}), InvalidArgument);
}

}  // namespace
}  // namespace thrnn
