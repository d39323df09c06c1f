#include "thrnn/harness.hpp"

#include <algorithm>
#include <numeric>

#include "thrnn/error.hpp"

namespace thrnn {

double target_days(Seconds gap, double cutoff_days) {
  return std::min(static_cast<double>(gap) / kSecondsPerDay, cutoff_days);
}

namespace {

// Sessions of one user in chronological order, with the index of the first test session.
struct Timeline {
  std::vector<const Session*> sessions;
  std::size_t first_test = 0;
};

Timeline timeline(const DatasetSplit& split, std::size_t u) {
  Timeline t;
  for (const auto& s : split.train[u].sessions) t.sessions.push_back(&s);
  t.first_test = t.sessions.size();
  for (const auto& s : split.test[u].sessions) t.sessions.push_back(&s);
  return t;
}

bool has_gap_target(const Timeline& t, std::size_t j) { return j > 0 && !t.sessions[j]->gap_masked; }

}  // namespace

Predictions predict_thrnn(const Model& model, const DatasetSplit& split) {
  const ModelConfig& cfg = model.config;
  const double cutoff_days = model.quadrature.cutoff * cfg.time_unit / kSecondsPerDay;
  const TimeHeadParams head = model.params.time.values();
  Predictions out;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const Timeline tl = timeline(split, u);
    const UserIndex user = split.train[u].user_index;
    std::vector<HistoryEntry> history;
    for (std::size_t j = 0; j < tl.sessions.size(); ++j) {
      const Session& s = *tl.sessions[j];
      const auto h = inter_state(model.params, cfg, user, history);
      const bool is_test = j >= tl.first_test;
      if (is_test && has_gap_target(tl, j)) {
        const double t_model = expected_return_time(h, head, model.quadrature);
        out.predicted_days.push_back(t_model * cfg.time_unit / kSecondsPerDay);
        out.target_days.push_back(target_days(s.gap_before, cutoff_days));
      }
      SessionPass pass = run_session(model.params, cfg, h, s.items, is_test);
      if (is_test) {
        for (std::size_t t = 0; t + 1 < s.items.size(); ++t) out.ranks.push_back(rank_of(pass.scores[t], s.items[t + 1]));
      }
      history.push_back(model.history_entry(std::move(pass.final_state), s));
      if (history.size() > cfg.max_session_reps) history.erase(history.begin());
    }
  }
  return out;
}

Predictions predict_popularity(const DatasetSplit& split) {
  std::vector<double> counts(split.num_items(), 0.0);
  for (const auto& h : split.train)
    for (const auto& s : h.sessions)
      for (auto i : s.items) counts[i] += 1.0;
  Predictions out;
  for (const auto& h : split.test) {
    for (const auto& s : h.sessions) {
      for (std::size_t t = 0; t + 1 < s.items.size(); ++t) out.ranks.push_back(rank_of(counts, s.items[t + 1]));
    }
  }
  return out;
}

Predictions predict_mean_gap(const DatasetSplit& split, double cutoff_days) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const Timeline tl = timeline(split, u);
    for (std::size_t j = 0; j < tl.first_test; ++j) {
      if (!has_gap_target(tl, j)) continue;
      sum += target_days(tl.sessions[j]->gap_before, cutoff_days);
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("mean-gap baseline: the train split has no gap targets");
  const double mean = sum / static_cast<double>(n);
  Predictions out;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const Timeline tl = timeline(split, u);
    for (std::size_t j = tl.first_test; j < tl.sessions.size(); ++j) {
      if (!has_gap_target(tl, j)) continue;
      out.predicted_days.push_back(mean);
      out.target_days.push_back(target_days(tl.sessions[j]->gap_before, cutoff_days));
    }
  }
  return out;
}

Predictions predict_hawkes(const DatasetSplit& split, const HawkesBaselineConfig& cfg) {
  const double cutoff_days = cfg.quadrature.cutoff;
  // Event times collapse session durations: consecutive events are exactly
  // one gap apart. Masked (split-session) boundaries are not events.
  std::vector<std::vector<double>> events(split.train.size());
  std::vector<std::size_t> train_events(split.train.size(), 0);
  double global_sum = 0.0;
  std::size_t global_n = 0;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const Timeline tl = timeline(split, u);
    double t = 0.0;
    for (std::size_t j = 0; j < tl.sessions.size(); ++j) {
      if (j > 0 && tl.sessions[j]->gap_masked) continue;
      if (j > 0) t += target_days(tl.sessions[j]->gap_before, cutoff_days);
      events[u].push_back(t);
      if (j < tl.first_test) {
        train_events[u] = events[u].size();
        if (j > 0) {
          global_sum += target_days(tl.sessions[j]->gap_before, cutoff_days);
          ++global_n;
        }
      }
    }
  }
  const double global_rate = global_n && global_sum > 0.0 ? static_cast<double>(global_n) / global_sum : 1.0;

  Predictions out;
  for (std::size_t u = 0; u < split.train.size(); ++u) {
    const Timeline tl = timeline(split, u);
    const std::span<const double> train(events[u].data(), train_events[u]);
    double fallback = global_rate;
    if (train.size() >= 2 && train.back() > train.front())
      fallback = static_cast<double>(train.size() - 1) / (train.back() - train.front());
    const hawkes::FitResult fitted = hawkes::fit(train, cfg.fit, fallback);

    std::size_t e = train_events[u];  // index of the next event in events[u]
    for (std::size_t j = tl.first_test; j < tl.sessions.size(); ++j) {
      if (j > 0 && tl.sessions[j]->gap_masked) continue;
      if (has_gap_target(tl, j)) {
        const std::size_t lo = e > cfg.prime_events ? e - cfg.prime_events : 0;
        const std::span<const double> primed(events[u].data() + lo, e - lo);
        out.predicted_days.push_back(hawkes::predict_next(primed, fitted.params, cfg.quadrature));
        out.target_days.push_back(target_days(tl.sessions[j]->gap_before, cutoff_days));
      }
      ++e;
    }
  }
  return out;
}

EvalReport make_report(std::string model, const Predictions& p, std::span<const double> edges_days,
                       std::span<const std::size_t> ks) {
  EvalReport r;
  r.model = std::move(model);
  if (!p.ranks.empty()) {
    r.has_ranking = true;
    r.rank_events = p.ranks.size();
    for (auto k : ks) {
      r.recall[k] = recall_at_k(p.ranks, k);
      r.mrr[k] = mrr_at_k(p.ranks, k);
    }
  }
  if (!p.target_days.empty()) {
    r.has_time = true;
    r.mae = mae_by_bucket(p.predicted_days, p.target_days, edges_days);
  }
  return r;
}

}  // namespace thrnn
