#pragma once

#include <random>
#include <vector>

#include "thrnn/model.hpp"

namespace tiny {

// Hidden 4, vocabulary 6, two-session histories, batch of two examples.
struct Setup {
  thrnn::ModelConfig cfg;
  thrnn::ModelParams params;
  std::vector<thrnn::TrainingExample> batch;
};

inline Setup make(double alpha_exp = 1.0, std::uint64_t seed = 7) {
  Setup s;
  s.cfg.num_items = 6;
  s.cfg.num_users = 3;
  s.cfg.num_gap_buckets = 5;
  s.cfg.item_embedding_dim = 3;
  s.cfg.user_embedding_dim = 2;
  s.cfg.gap_embedding_dim = 2;
  s.cfg.hidden_dim_inter = s.cfg.hidden_dim_intra = 4;
  s.cfg.max_session_reps = 2;
  s.cfg.alpha_exp = alpha_exp;
  s.params = thrnn::ModelParams::initialize(s.cfg, seed);

  // Spread every array, biases included, away from zero.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  for (auto* p : s.params.all())
    for (auto& v : p->value.data()) v = d(rng);
  s.params.time.w.value[0] = -0.2;

  auto state = [&] {
    std::vector<double> h(4);
    for (auto& v : h) v = d(rng);
    return h;
  };
  thrnn::TrainingExample a;
  a.user = 1;
  a.history = {{state(), 3}, {state(), 1}};
  a.items = {2, 5, 0, 4};
  a.gap_target = 1.3;
  a.gap_masked = false;
  thrnn::TrainingExample b;
  b.user = 2;
  b.history = {{state(), 0}, {state(), 4}};
  b.items = {1, 3, 3};
  b.gap_target = 0.25;
  b.gap_masked = false;
  s.batch = {a, b};
  return s;
}

inline thrnn::Tape::Var loss(thrnn::Tape& tape, Setup& s) {
  std::vector<thrnn::ForwardResult> results;
  for (const auto& ex : s.batch) results.push_back(thrnn::forward(tape, ex, s.params, s.cfg));
  return thrnn::joint_loss(tape, results, s.batch, s.params, s.cfg);
}

}  // namespace tiny
