#include "thrnn/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "thrnn/checkpoint.hpp"
#include "thrnn/error.hpp"
#include "thrnn/harness.hpp"
#include "thrnn/ingest.hpp"
#include "thrnn/split_io.hpp"
#include "thrnn/synthetic.hpp"

namespace thrnn {

using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

void write_outputs(const fs::path& dir, const EvalReport& r) {
  auto report = open_out(dir / (r.model + ".report.jsonl"));
  write_report(report, r);
  if (r.has_time) {
    auto plot = open_out(dir / (r.model + ".plot.tsv"));
    write_plot_data(plot, r);
  }
}

}  // namespace

json stats_json(const DatasetSplit& split) {
  const CorpusStats s = corpus_stats(split);
  return {{"users", s.users},
          {"sessions", s.sessions},
          {"items", s.items},
          {"interactions", s.interactions},
          {"sessions_per_user", s.sessions_per_user},
          {"average_session_length", s.average_session_length}};
}

json cmd_preprocess(const std::string& dataset, const fs::path& input, const fs::path& output, const RunConfig& cfg) {
  cfg.validate();
  DatasetSplit split;
  json stats;
  if (dataset == "synthetic") {
    split = synth::generate_corpus(synth::spec_from_json(read_json_file(input)), cfg.training.seed);
    stats = stats_json(split);
  } else {
    DatasetFormat format;
    if (dataset == "lastfm") format = DatasetFormat::LastFm;
    else if (dataset == "reddit") format = DatasetFormat::Reddit;
    else throw InvalidArgument("unknown dataset '" + dataset + "' (expected lastfm, reddit or synthetic)");
    const IngestResult raw = ingest_file(input, format);
    split = build_split(raw, cfg.pipeline);
    stats = stats_json(split);
    stats["rows"] = raw.rows;
    stats["malformed_rows"] = raw.malformed;
  }
  if (const std::string bad = check_invariants(split, cfg.pipeline.max_session_length); !bad.empty())
    throw Error("preprocessed split violates an invariant: " + bad);
  save_split(output, split);
  return stats;
}

json cmd_synth(const fs::path& spec_path, const fs::path& output, std::uint64_t seed) {
  const synth::SynthSpec spec = synth::spec_from_json(read_json_file(spec_path));
  const DatasetSplit split = synth::generate_corpus(spec, seed);
  save_split(output, split);
  return stats_json(split);
}

std::string cmd_train(const fs::path& split_path, const fs::path& checkpoint, const RunConfig& cfg,
                      const std::optional<fs::path>& resume, std::ostream& log) {
  cfg.validate();
  const DatasetSplit split = load_split(split_path);
  std::optional<Trainer> trainer;
  if (resume) {
    Checkpoint c = load_checkpoint(*resume);
    if (c.model.item_ids != split.item_ids || c.model.user_ids != split.user_ids)
      throw InvalidArgument("checkpoint " + resume->string() + " was trained on a different split");
    TrainConfig t = cfg.training;
    trainer.emplace(std::move(c.model), t, c.optimizer.value_or(Adam{}), c.epochs_done);
  } else {
    trainer.emplace(make_model(split, cfg.model, cfg.bucketizer, cfg.quadrature, cfg.training.seed), cfg.training);
  }
  trainer->fit(split, cfg.training.epochs, [&](const EpochMetrics& m) {
    json line{{"epoch", m.epoch},
              {"train_loss", m.train_loss},
              {"train_time_loss", m.train_time_loss},
              {"train_rec_loss", m.train_rec_loss},
              {"batches", m.batches},
              {"skipped_updates", m.skipped_updates}};
    if (m.validated) {
      line["val_recall5"] = m.val_recall5;
      line["val_mae_days"] = m.val_mae_days;
    }
    log << line.dump() << '\n' << std::flush;
  });
  save_checkpoint(checkpoint, trainer->model(), trainer->config(), trainer->epochs_done(), &trainer->optimizer());
  return file_digest(checkpoint);
}

std::vector<EvalReport> cmd_evaluate(const std::vector<fs::path>& checkpoints, const fs::path& split_path,
                                     const std::vector<std::string>& baselines, const fs::path& out_dir,
                                     const RunConfig& cfg) {
  cfg.validate();
  const DatasetSplit split = load_split(split_path);
  fs::create_directories(out_dir);
  const double cutoff_days = cfg.cutoff_days();
  const std::vector<double> edges = uniform_edges(cfg.evaluation.bucket_width_days, cutoff_days);
  const std::span<const std::size_t> ks(cfg.evaluation.ks);

  std::vector<EvalReport> reports;
  std::vector<EvalReport> runs;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const Checkpoint c = load_checkpoint(checkpoints[i]);
    if (c.model.item_ids != split.item_ids || c.model.user_ids != split.user_ids)
      throw InvalidArgument("checkpoint " + checkpoints[i].string() + " was trained on a different split");
    const std::string name = checkpoints.size() == 1 ? "thrnn" : "thrnn." + std::to_string(i);
    runs.push_back(make_report(name, predict_thrnn(c.model, split), edges, ks));
    write_outputs(out_dir, runs.back());
    reports.push_back(runs.back());
  }
  if (runs.size() > 1) {
    auto out = open_out(out_dir / "thrnn.aggregate.jsonl");
    AggregateReport agg = aggregate(runs);
    agg.model = "thrnn";
    write_aggregate(out, agg);
  }

  for (const auto& b : baselines) {
    Predictions p;
    if (b == "popularity") {
      p = predict_popularity(split);
    } else if (b == "mean_gap") {
      p = predict_mean_gap(split, cutoff_days);
    } else if (b == "hawkes_short" || b == "hawkes_long") {
      HawkesBaselineConfig h;
      h.fit = b == "hawkes_short" ? cfg.hawkes.short_window : cfg.hawkes.long_window;
      h.quadrature = {cutoff_days, cfg.quadrature.num_points};
      h.prime_events = cfg.hawkes.prime_events;
      p = predict_hawkes(split, h);
    } else {
      throw InvalidArgument("unknown baseline '" + b + "'");
    }
    reports.push_back(make_report(b, p, edges, ks));
    write_outputs(out_dir, reports.back());
  }
  return reports;
}

json cmd_predict(const fs::path& checkpoint, const json& history, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  const Checkpoint c = load_checkpoint(checkpoint);
  const Model& m = c.model;
  const ModelConfig& cfg = m.config;

  std::unordered_map<std::string, ItemIndex> items;
  for (std::size_t i = 0; i < m.item_ids.size(); ++i) items.emplace(m.item_ids[i], static_cast<ItemIndex>(i));

  std::string user_id;
  std::vector<Session> sessions;
  std::vector<std::string> current_ids;
  std::vector<std::string> unknown;
  auto lookup = [&](const json& id) {
    const auto name = id.get<std::string>();
    const auto it = items.find(name);
    if (it == items.end()) {
      unknown.push_back(name);
      return ItemIndex{0};
    }
    return it->second;
  };
  try {
    user_id = history.at("user").get<std::string>();
    for (const auto& s : history.value("sessions", json::array())) {
      Session session;
      session.start_time = s.at("start").get<Seconds>();
      session.end_time = s.at("end").get<Seconds>();
      for (const auto& id : s.at("items")) session.items.push_back(lookup(id));
      sessions.push_back(std::move(session));
    }
    if (history.contains("current"))
      for (const auto& id : history.at("current")) {
        lookup(id);
        current_ids.push_back(id.get<std::string>());
      }
  } catch (const json::exception& e) {
    throw FormatError(std::string("history is malformed: ") + e.what());
  }
  if (!unknown.empty()) {
    std::string msg = "unknown items in history:";
    for (const auto& id : unknown) msg += " " + id;
    throw InvalidArgument(msg);
  }
  const auto user_it = std::find(m.user_ids.begin(), m.user_ids.end(), user_id);
  if (user_it == m.user_ids.end()) throw InvalidArgument("unknown user '" + user_id + "'");
  const auto user = static_cast<UserIndex>(user_it - m.user_ids.begin());
  assign_gaps(sessions);

  std::vector<HistoryEntry> past;
  for (const auto& s : sessions) {
    const auto h = inter_state(m.params, cfg, user, past);
    past.push_back(m.history_entry(run_session(m.params, cfg, h, s.items, false).final_state, s));
  }
  const auto h = inter_state(m.params, cfg, user, past);
  const double t_model = expected_return_time(h, m.params.time.values(), m.quadrature);

  std::vector<ItemIndex> current;
  for (const auto& id : current_ids) current.push_back(items.at(id));
  std::vector<double> scores;
  if (current.empty()) {
    scores = linear_forward(h, m.params.output_weight.value, m.params.output_bias.value);
  } else {
    scores = run_session(m.params, cfg, h, current, true).scores.back();
  }
  json out{{"user", user_id}, {"k", k}};
  json ranked = json::array();
  for (ItemIndex i : top_k(scores, k)) ranked.push_back({{"item", m.item_ids[i]}, {"score", scores[i]}});
  out["items"] = std::move(ranked);
  out["return_time_seconds"] = t_model * cfg.time_unit;
  out["return_time_days"] = t_model * cfg.time_unit / 86400.0;
  return out;
}

}  // namespace thrnn
