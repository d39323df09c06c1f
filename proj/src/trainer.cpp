#include "thrnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "thrnn/harness.hpp"

namespace thrnn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(learning_rate_time > 0.0)) throw InvalidArgument("learning rates must be positive");
  if (time_clip_norm < 0.0) throw InvalidArgument("time_clip_norm must be non-negative");
}

double Model::gap_in_model_units(Seconds gap) const {
  return std::min(static_cast<double>(gap) / config.time_unit, quadrature.cutoff);
}

HistoryEntry Model::history_entry(std::vector<double> state, const Session& s) const {
  return {std::move(state), bucketize_gap(static_cast<double>(s.gap_before), bucketizer)};
}

Model make_model(const DatasetSplit& split, ModelConfig cfg, const GapBucketizer& bucketizer,
                 const QuadratureConfig& quadrature, std::uint64_t seed) {
  bucketizer.validate();
  quadrature.validate();
  cfg.num_items = split.num_items();
  cfg.num_users = split.num_users();
  cfg.num_gap_buckets = bucketizer.num_buckets;
  cfg.validate();
  Model m{cfg, ModelParams::initialize(cfg, seed), bucketizer, quadrature, split.item_ids, split.user_ids};
  return m;
}

Trainer::Trainer(Model model, TrainConfig cfg) : model_(std::move(model)), cfg_(cfg) { cfg_.validate(); }

Trainer::Trainer(Model model, TrainConfig cfg, Adam optimizer, std::size_t epochs_done)
    : model_(std::move(model)), cfg_(cfg), adam_(std::move(optimizer)), epochs_done_(epochs_done) {
  cfg_.validate();
}

EpochMetrics Trainer::run_epoch(const DatasetSplit& split) {
  const ModelConfig& mc = model_.config;
  ModelParams& params = model_.params;
  const std::size_t epoch = epochs_done_ + 1;
  std::seed_seq seq{cfg_.seed, static_cast<std::uint64_t>(epoch)};
  std::mt19937_64 rng(seq);

  std::vector<std::size_t> order;
  for (std::size_t u = 0; u < split.train.size(); ++u)
    if (!split.train[u].sessions.empty()) order.push_back(u);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Parameter*> main_params = params.non_time();
  if (!mc.context_embeddings)
    std::erase_if(main_params, [&](Parameter* p) { return p == &params.user_embedding || p == &params.gap_embedding; });
  std::vector<ParamGroup> groups{{"main", main_params, cfg_.learning_rate, 0.0},
                                 {"time", params.time_head(), cfg_.learning_rate_time, cfg_.time_clip_norm}};

  std::vector<std::vector<HistoryEntry>> history(split.train.size());
  EpochMetrics m;
  m.epoch = epoch;
  double loss_sum = 0.0, time_sum = 0.0, rec_sum = 0.0;
  Tape tape;

  for (std::size_t g0 = 0; g0 < order.size(); g0 += mc.batch_size) {
    const std::size_t g1 = std::min(order.size(), g0 + mc.batch_size);
    std::size_t depth = 0;
    for (std::size_t i = g0; i < g1; ++i) depth = std::max(depth, split.train[order[i]].sessions.size());

    for (std::size_t j = 0; j < depth; ++j) {
      std::vector<TrainingExample> examples;
      std::vector<std::size_t> users;
      for (std::size_t i = g0; i < g1; ++i) {
        const UserHistory& h = split.train[order[i]];
        if (j >= h.sessions.size()) continue;
        const Session& s = h.sessions[j];
        TrainingExample ex;
        ex.user = h.user_index;
        auto& past = history[order[i]];
        const std::size_t first = past.size() > mc.max_session_reps ? past.size() - mc.max_session_reps : 0;
        ex.history.assign(past.begin() + static_cast<std::ptrdiff_t>(first), past.end());
        ex.items = s.items;
        ex.gap_masked = j == 0 || s.gap_masked;
        ex.gap_target = ex.gap_masked ? 0.0 : model_.gap_in_model_units(s.gap_before);
        examples.push_back(std::move(ex));
        users.push_back(order[i]);
      }

      tape.clear();
      std::vector<ForwardResult> results;
      results.reserve(examples.size());
      for (const auto& ex : examples)
        results.push_back(forward(tape, ex, params, mc, mc.dropout_rate > 0.0 ? &rng : nullptr));

      // States are taken from the weights the batch was evaluated with.
      for (std::size_t e = 0; e < examples.size(); ++e) {
        const auto& items = examples[e].items;
        std::vector<double> state(tape.value(results[e].last_intra_state).begin(),
                                  tape.value(results[e].last_intra_state).end());
        if (!items.empty()) state = gru_cell_forward(params.item_embedding.value.row(items.back()), state, params.intra);
        const Session& s = split.train[users[e]].sessions[j];
        history[users[e]].push_back(model_.history_entry(std::move(state), s));
        if (history[users[e]].size() > mc.max_session_reps) history[users[e]].erase(history[users[e]].begin());
      }

      LossParts parts;
      Tape::Var loss = joint_loss(tape, results, examples, params, mc, &parts);
      if (parts.time_count + parts.rec_count == 0) continue;
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "training diverged: non-finite loss in epoch " << epoch << ", batch " << m.batches + 1;
        throw TrainingDiverged(os.str());
      }
      params.zero_grad();
      tape.backward(loss);
      const auto skipped = adam_.step(groups);
      if (!skipped.empty()) ++m.skipped_updates;
      ++m.batches;
      loss_sum += value;
      time_sum += parts.time;
      rec_sum += parts.rec;
    }
  }

  if (m.batches > 0) {
    const double n = static_cast<double>(m.batches);
    m.train_loss = loss_sum / n;
    m.train_time_loss = time_sum / n;
    m.train_rec_loss = rec_sum / n;
  }
  epochs_done_ = epoch;

  if (cfg_.validate_each_epoch) {
    const Predictions p = predict_thrnn(model_, split);
    m.validated = true;
    if (!p.ranks.empty()) m.val_recall5 = recall_at_k(p.ranks, 5);
    if (!p.target_days.empty()) {
      double sum = 0.0;
      for (std::size_t i = 0; i < p.target_days.size(); ++i) sum += std::abs(p.predicted_days[i] - p.target_days[i]);
      m.val_mae_days = sum / static_cast<double>(p.target_days.size());
    }
  }
  return m;
}

std::vector<EpochMetrics> Trainer::fit(const DatasetSplit& split, std::size_t epochs,
                                       const std::function<void(const EpochMetrics&)>& on_epoch) {
  std::vector<EpochMetrics> out;
  for (std::size_t e = 0; e < epochs; ++e) {
    out.push_back(run_epoch(split));
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

TrainResult train(const DatasetSplit& split, const ModelConfig& cfg, const TrainConfig& tcfg,
                  const GapBucketizer& bucketizer, const QuadratureConfig& quadrature) {
  Trainer trainer(make_model(split, cfg, bucketizer, quadrature, tcfg.seed), tcfg);
  auto epochs = trainer.fit(split, tcfg.epochs);
  return {std::move(trainer.model()), std::move(epochs)};
}

}  // namespace thrnn
