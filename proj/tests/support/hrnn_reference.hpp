#pragma once

#include <vector>

#include "support/oracles.hpp"
#include "thrnn/model.hpp"

namespace reference {

// Plain hierarchical GRU: the inter-session GRU sees only past session
// states (the leading H input columns), the intra-session GRU starts from
// its output, and scores are W s + b after every item.
inline std::vector<std::vector<double>> hrnn_scores(const thrnn::ModelParams& p, const thrnn::ModelConfig& cfg,
                                                    const std::vector<std::vector<double>>& past_states,
                                                    const std::vector<thrnn::ItemIndex>& items) {
  const std::size_t H = cfg.hidden_dim();
  thrnn::Array2 W(3 * H, H);
  for (std::size_t r = 0; r < 3 * H; ++r)
    for (std::size_t c = 0; c < H; ++c) W(r, c) = p.inter.input.value(r, c);

  std::vector<double> h(H, 0.0);
  const std::size_t first = past_states.size() > cfg.max_session_reps ? past_states.size() - cfg.max_session_reps : 0;
  for (std::size_t i = first; i < past_states.size(); ++i)
    h = oracle::gru(W, p.inter.recurrent.value, p.inter.bias.value, past_states[i], h);

  std::vector<std::vector<double>> out;
  for (auto item : items) {
    const auto x = p.item_embedding.value.row(item);
    h = oracle::gru(p.intra.input.value, p.intra.recurrent.value, p.intra.bias.value,
                    std::vector<double>(x.begin(), x.end()), h);
    std::vector<double> scores(cfg.num_items);
    for (std::size_t n = 0; n < cfg.num_items; ++n) {
      double a = p.output_bias.value[n];
      for (std::size_t k = 0; k < H; ++k) a += p.output_weight.value(n, k) * h[k];
      scores[n] = a;
    }
    out.push_back(std::move(scores));
  }
  return out;
}

// Runs a user's sessions in order, feeding each session's final intra state
// back as history, and returns the scores after every item of every session.
inline std::vector<std::vector<std::vector<double>>> hrnn_trace(const thrnn::ModelParams& p,
                                                                const thrnn::ModelConfig& cfg,
                                                                const std::vector<std::vector<thrnn::ItemIndex>>& sessions) {
  const std::size_t H = cfg.hidden_dim();
  std::vector<std::vector<double>> past;
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& items : sessions) {
    out.push_back(hrnn_scores(p, cfg, past, items));
    // Recover the final state by replaying the session without scoring.
    thrnn::Array2 W(3 * H, H);
    for (std::size_t r = 0; r < 3 * H; ++r)
      for (std::size_t c = 0; c < H; ++c) W(r, c) = p.inter.input.value(r, c);
    std::vector<double> h(H, 0.0);
    const std::size_t first = past.size() > cfg.max_session_reps ? past.size() - cfg.max_session_reps : 0;
    for (std::size_t i = first; i < past.size(); ++i)
      h = oracle::gru(W, p.inter.recurrent.value, p.inter.bias.value, past[i], h);
    for (auto item : items) {
      const auto x = p.item_embedding.value.row(item);
      h = oracle::gru(p.intra.input.value, p.intra.recurrent.value, p.intra.bias.value,
                      std::vector<double>(x.begin(), x.end()), h);
    }
    past.push_back(std::move(h));
  }
  return out;
}

}  // namespace reference
