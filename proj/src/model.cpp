#include "thrnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "thrnn/error.hpp"

namespace thrnn {

namespace {

void uniform_fill(Array2& a, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : a.data()) v = dist(rng);
}

void xavier(Array2& a, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  uniform_fill(a, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

// Index of the oldest history entry the inter-session GRU consumes.
std::size_t history_start(std::size_t size, std::size_t max_reps) { return size > max_reps ? size - max_reps : 0; }

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw InvalidArgument(std::string(name) + " must be > 0");
  };
  positive(num_items, "num_items");
  positive(num_users, "num_users");
  positive(num_gap_buckets, "num_gap_buckets");
  positive(item_embedding_dim, "item_embedding_dim");
  positive(user_embedding_dim, "user_embedding_dim");
  positive(gap_embedding_dim, "gap_embedding_dim");
  positive(hidden_dim_inter, "hidden_dim_inter");
  positive(hidden_dim_intra, "hidden_dim_intra");
  positive(max_session_reps, "max_session_reps");
  positive(batch_size, "batch_size");
  if (num_items < 2) throw InvalidArgument("num_items must be >= 2");
  if (hidden_dim_inter != hidden_dim_intra)
    throw InvalidArgument("hidden_dim_inter must equal hidden_dim_intra (the inter state seeds the intra GRU)");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout_rate must lie in [0, 1)");
  if (!(loss_weight_time >= 0.0) || !(loss_weight_rec >= 0.0)) throw InvalidArgument("loss weights must be >= 0");
  time_loss().validate();
}

ModelParams ModelParams::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t H = cfg.hidden_dim();
  ModelParams p;
  p.item_embedding = Parameter("item_embedding", cfg.num_items, cfg.item_embedding_dim);
  p.user_embedding = Parameter("user_embedding", cfg.num_users, cfg.user_embedding_dim);
  p.gap_embedding = Parameter("gap_embedding", cfg.num_gap_buckets, cfg.gap_embedding_dim);
  p.inter = GruParams("inter", cfg.representation_dim(), H);
  p.intra = GruParams("intra", cfg.item_embedding_dim, H);
  p.output_weight = Parameter("output.weight", cfg.num_items, H);
  p.output_bias = Parameter("output.bias", cfg.num_items, 1);
  p.time = TimeHead(H);

  std::seed_seq seq{seed, std::uint64_t{0x7468726e6eULL}};
  std::mt19937_64 rng(seq);
  uniform_fill(p.item_embedding.value, 0.05, rng);
  if (cfg.context_embeddings) {
    uniform_fill(p.user_embedding.value, 0.05, rng);
    uniform_fill(p.gap_embedding.value, 0.05, rng);
  }
  xavier(p.inter.input.value, cfg.representation_dim(), H, rng);
  xavier(p.inter.recurrent.value, H, H, rng);
  xavier(p.intra.input.value, cfg.item_embedding_dim, H, rng);
  xavier(p.intra.recurrent.value, H, H, rng);
  xavier(p.output_weight.value, H, cfg.num_items, rng);
  xavier(p.time.v.value, H, 1, rng);
  p.time.w.value[0] = -0.1;
  return p;
}

std::vector<Parameter*> ModelParams::all() {
  return {&item_embedding, &user_embedding,  &gap_embedding,   &inter.input,  &inter.recurrent, &inter.bias,
          &intra.input,    &intra.recurrent, &intra.bias,      &output_weight, &output_bias,   &time.v,
          &time.w,         &time.b};
}

std::vector<const Parameter*> ModelParams::all() const {
  auto ptrs = const_cast<ModelParams*>(this)->all();
  return {ptrs.begin(), ptrs.end()};
}

std::vector<Parameter*> ModelParams::time_head() { return {&time.v, &time.w, &time.b}; }

std::vector<Parameter*> ModelParams::non_time() {
  auto v = all();
  v.resize(v.size() - 3);
  return v;
}

void ModelParams::zero_grad() {
  for (auto* p : all()) p->zero_grad();
}

ForwardResult forward(Tape& tape, const TrainingExample& ex, ModelParams& params, const ModelConfig& cfg,
                      std::mt19937_64* dropout_rng) {
  const std::size_t H = cfg.hidden_dim();
  const double rate = dropout_rng ? cfg.dropout_rate : 0.0;
  if (ex.user >= cfg.num_users) throw InvalidArgument("user index out of range");

  Tape::Var h = tape.constant(std::vector<double>(H, 0.0));
  const std::size_t first = history_start(ex.history.size(), cfg.max_session_reps);
  for (std::size_t i = first; i < ex.history.size(); ++i) {
    const HistoryEntry& entry = ex.history[i];
    if (entry.session_state.size() != cfg.hidden_dim_intra) throw ShapeError("history entry has the wrong dimension");
    Tape::Var parts[3];
    parts[0] = tape.constant(entry.session_state);
    if (cfg.context_embeddings) {
      parts[1] = tape.embedding(params.gap_embedding, entry.gap_bucket);
      parts[2] = tape.embedding(params.user_embedding, ex.user);
    } else {
      parts[1] = tape.constant(std::vector<double>(cfg.gap_embedding_dim, 0.0));
      parts[2] = tape.constant(std::vector<double>(cfg.user_embedding_dim, 0.0));
    }
    Tape::Var rep = tape.concat(parts);
    if (rate > 0.0) rep = tape.dropout(rep, rate, *dropout_rng);
    h = tape.gru(params.inter, rep, h);
  }

  ForwardResult out;
  out.inter_state = h;
  Tape::Var s = h;
  for (std::size_t t = 0; t + 1 < ex.items.size(); ++t) {
    Tape::Var x = tape.embedding(params.item_embedding, ex.items[t]);
    if (rate > 0.0) x = tape.dropout(x, rate, *dropout_rng);
    s = tape.gru(params.intra, x, s);
    out.scores.push_back(tape.linear(params.output_weight, params.output_bias, s));
  }
  out.last_intra_state = s;
  return out;
}

double combine_losses(double time_loss, double rec_loss, const ModelConfig& cfg) {
  return cfg.loss_weight_time * time_loss + cfg.loss_weight_rec * rec_loss;
}

Tape::Var joint_loss(Tape& tape, std::span<const ForwardResult> results, std::span<const TrainingExample> examples,
                     ModelParams& params, const ModelConfig& cfg, LossParts* parts) {
  if (results.size() != examples.size()) throw ShapeError("joint_loss: results and examples differ in length");
  std::vector<Tape::Var> rec_terms;
  std::vector<Tape::Var> time_terms;
  const TimeLossConfig tcfg = cfg.time_loss();
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const auto& ex = examples[e];
    const auto& res = results[e];
    if (res.scores.size() + 1 != std::max<std::size_t>(ex.items.size(), 1))
      throw ShapeError("joint_loss: score count does not match the session");
    for (std::size_t t = 0; t < res.scores.size(); ++t)
      rec_terms.push_back(tape.softmax_xent(res.scores[t], ex.items[t + 1]));
    if (!ex.gap_masked) time_terms.push_back(time_loss(tape, res.inter_state, params.time, ex.gap_target, tcfg));
  }
  std::vector<Tape::Var> terms;
  std::vector<double> weights;
  LossParts lp;
  lp.rec_count = rec_terms.size();
  lp.time_count = time_terms.size();
  for (auto v : rec_terms) {
    terms.push_back(v);
    weights.push_back(cfg.loss_weight_rec / static_cast<double>(rec_terms.size()));
    lp.rec += tape.scalar(v);
  }
  for (auto v : time_terms) {
    terms.push_back(v);
    weights.push_back(cfg.loss_weight_time / static_cast<double>(time_terms.size()));
    lp.time += tape.scalar(v);
  }
  if (lp.rec_count) lp.rec /= static_cast<double>(lp.rec_count);
  if (lp.time_count) lp.time /= static_cast<double>(lp.time_count);
  Tape::Var total = tape.weighted_sum(terms, weights);
  lp.total = tape.scalar(total);
  if (parts) *parts = lp;
  return total;
}

std::vector<double> inter_state(const ModelParams& params, const ModelConfig& cfg, UserIndex user,
                                std::span<const HistoryEntry> history) {
  const std::size_t H = cfg.hidden_dim();
  if (user >= cfg.num_users) throw InvalidArgument("user index out of range");
  std::vector<double> h(H, 0.0);
  const std::size_t first = history_start(history.size(), cfg.max_session_reps);
  std::vector<double> rep(cfg.representation_dim(), 0.0);
  for (std::size_t i = first; i < history.size(); ++i) {
    const auto& entry = history[i];
    if (entry.session_state.size() != cfg.hidden_dim_intra) throw ShapeError("history entry has the wrong dimension");
    if (entry.gap_bucket >= cfg.num_gap_buckets) throw InvalidArgument("gap bucket out of range");
    std::fill(rep.begin(), rep.end(), 0.0);
    std::copy(entry.session_state.begin(), entry.session_state.end(), rep.begin());
    if (cfg.context_embeddings) {
      const auto g = params.gap_embedding.value.row(entry.gap_bucket);
      const auto u = params.user_embedding.value.row(user);
      std::copy(g.begin(), g.end(), rep.begin() + static_cast<std::ptrdiff_t>(cfg.hidden_dim_intra));
      std::copy(u.begin(), u.end(),
                rep.begin() + static_cast<std::ptrdiff_t>(cfg.hidden_dim_intra + cfg.gap_embedding_dim));
    }
    h = gru_cell_forward(rep, h, params.inter);
  }
  return h;
}

SessionPass run_session(const ModelParams& params, const ModelConfig& cfg, std::span<const double> initial_state,
                        std::span<const ItemIndex> items, bool keep_scores) {
  if (initial_state.size() != cfg.hidden_dim()) throw ShapeError("initial state has the wrong dimension");
  SessionPass pass;
  std::vector<double> s(initial_state.begin(), initial_state.end());
  for (ItemIndex item : items) {
    if (item >= cfg.num_items) {
      std::ostringstream os;
      os << "unknown item index " << item << " (vocabulary has " << cfg.num_items << " items)";
      throw InvalidArgument(os.str());
    }
    s = gru_cell_forward(params.item_embedding.value.row(item), s, params.intra);
    if (keep_scores) pass.scores.push_back(linear_forward(s, params.output_weight.value, params.output_bias.value));
  }
  pass.final_state = std::move(s);
  return pass;
}

std::vector<ItemIndex> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<ItemIndex> idx(scores.size());
  std::iota(idx.begin(), idx.end(), ItemIndex{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](ItemIndex a, ItemIndex b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  idx.resize(k);
  return idx;
}

std::size_t rank_of(std::span<const double> scores, ItemIndex target) {
  if (target >= scores.size()) throw InvalidArgument("rank_of: target out of range");
  const double t = scores[target];
  std::size_t greater = 0;
  for (double s : scores) greater += s > t ? 1 : 0;
  return greater + 1;
}

}  // namespace thrnn
