#include "thrnn/config.hpp"

#include <fstream>
#include <set>

#include "thrnn/error.hpp"

namespace thrnn {

using nlohmann::json;

namespace {

// Reads typed fields from one object and rejects keys it was not asked about.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InvalidArgument("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw InvalidArgument("unknown config key '" + name_ + "." + key + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string scheme_name(BucketScheme s) { return s == BucketScheme::Log ? "log" : "uniform"; }

BucketScheme parse_scheme(const std::string& s) {
  if (s == "uniform") return BucketScheme::Uniform;
  if (s == "log") return BucketScheme::Log;
  throw InvalidArgument("bucketizer scheme must be 'uniform' or 'log', got '" + s + "'");
}

json to_json(const hawkes::FitConfig& c) {
  return {{"window", c.window == hawkes::Window::LastK ? "last_k" : "full"},
          {"last_k", c.last_k},
          {"max_iterations", c.max_iterations},
          {"tolerance", c.tolerance},
          {"max_branching", c.max_branching}};
}

hawkes::FitConfig fit_config_from_json(const json& j, const std::string& name, hawkes::FitConfig c) {
  Section s(j, name);
  std::string window = c.window == hawkes::Window::LastK ? "last_k" : "full";
  s.read("window", window);
  if (window == "last_k") c.window = hawkes::Window::LastK;
  else if (window == "full") c.window = hawkes::Window::FullHistory;
  else throw InvalidArgument("hawkes window must be 'last_k' or 'full', got '" + window + "'");
  s.read("last_k", c.last_k);
  s.read("max_iterations", c.max_iterations);
  s.read("tolerance", c.tolerance);
  s.read("max_branching", c.max_branching);
  s.finish();
  return c;
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"num_items", c.num_items},
          {"num_users", c.num_users},
          {"num_gap_buckets", c.num_gap_buckets},
          {"item_embedding_dim", c.item_embedding_dim},
          {"user_embedding_dim", c.user_embedding_dim},
          {"gap_embedding_dim", c.gap_embedding_dim},
          {"hidden_dim_inter", c.hidden_dim_inter},
          {"hidden_dim_intra", c.hidden_dim_intra},
          {"max_session_reps", c.max_session_reps},
          {"dropout_rate", c.dropout_rate},
          {"loss_weight_time", c.loss_weight_time},
          {"loss_weight_rec", c.loss_weight_rec},
          {"alpha_exp", c.alpha_exp},
          {"batch_size", c.batch_size},
          {"context_embeddings", c.context_embeddings},
          {"time_unit", c.time_unit}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  Section s(j, "model");
  s.read("num_items", c.num_items);
  s.read("num_users", c.num_users);
  s.read("num_gap_buckets", c.num_gap_buckets);
  s.read("item_embedding_dim", c.item_embedding_dim);
  s.read("user_embedding_dim", c.user_embedding_dim);
  s.read("gap_embedding_dim", c.gap_embedding_dim);
  s.read("hidden_dim_inter", c.hidden_dim_inter);
  s.read("hidden_dim_intra", c.hidden_dim_intra);
  s.read("max_session_reps", c.max_session_reps);
  s.read("dropout_rate", c.dropout_rate);
  s.read("loss_weight_time", c.loss_weight_time);
  s.read("loss_weight_rec", c.loss_weight_rec);
  s.read("alpha_exp", c.alpha_exp);
  s.read("batch_size", c.batch_size);
  s.read("context_embeddings", c.context_embeddings);
  s.read("time_unit", c.time_unit);
  s.finish();
  return c;
}

json to_json(const GapBucketizer& c) {
  return {{"upper_bound_seconds", c.upper_bound}, {"num_buckets", c.num_buckets}, {"scheme", scheme_name(c.scheme)}};
}

GapBucketizer bucketizer_from_json(const json& j, GapBucketizer c) {
  Section s(j, "bucketizer");
  s.read("upper_bound_seconds", c.upper_bound);
  s.read("num_buckets", c.num_buckets);
  std::string scheme = scheme_name(c.scheme);
  s.read("scheme", scheme);
  c.scheme = parse_scheme(scheme);
  s.finish();
  return c;
}

json to_json(const QuadratureConfig& c) { return {{"cutoff", c.cutoff}, {"num_points", c.num_points}}; }

QuadratureConfig quadrature_from_json(const json& j, QuadratureConfig c) {
  Section s(j, "quadrature");
  s.read("cutoff", c.cutoff);
  s.read("num_points", c.num_points);
  s.finish();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"seed", c.seed},
          {"learning_rate", c.learning_rate},
          {"learning_rate_time", c.learning_rate_time},
          {"time_clip_norm", c.time_clip_norm},
          {"validate_each_epoch", c.validate_each_epoch}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  Section s(j, "training");
  s.read("epochs", c.epochs);
  s.read("seed", c.seed);
  s.read("learning_rate", c.learning_rate);
  s.read("learning_rate_time", c.learning_rate_time);
  s.read("time_clip_norm", c.time_clip_norm);
  s.read("validate_each_epoch", c.validate_each_epoch);
  s.finish();
  return c;
}

RunConfig profile_defaults(std::string_view profile) {
  RunConfig c;
  c.profile = std::string(profile);
  if (profile == "lastfm") {
    c.model.item_embedding_dim = 100;
    c.model.dropout_rate = 0.2;
  } else if (profile == "reddit") {
    c.model.item_embedding_dim = 50;
    c.model.dropout_rate = 0.0;
  } else if (profile == "synthetic") {
    c.model.item_embedding_dim = 32;
    c.model.hidden_dim_inter = c.model.hidden_dim_intra = 32;
    c.model.dropout_rate = 0.0;
  } else {
    throw InvalidArgument("unknown profile '" + std::string(profile) + "' (expected lastfm, reddit or synthetic)");
  }
  return c;
}

void RunConfig::validate() const {
  ModelConfig sized = model;
  sized.num_items = std::max<std::size_t>(model.num_items, 2);
  sized.num_users = std::max<std::size_t>(model.num_users, 1);
  sized.validate();
  model.time_loss().validate();
  bucketizer.validate();
  quadrature.validate();
  training.validate();
  hawkes.short_window.validate();
  hawkes.long_window.validate();
  if (pipeline.gap_threshold <= 0) throw InvalidArgument("pipeline gap_threshold must be > 0");
  if (pipeline.max_session_length < 2) throw InvalidArgument("pipeline max_session_length must be >= 2");
  if (!(pipeline.train_fraction > 0.0 && pipeline.train_fraction < 1.0))
    throw InvalidArgument("pipeline train_fraction must lie in (0, 1)");
  if (!(evaluation.bucket_width_days > 0.0)) throw InvalidArgument("evaluation bucket_width_days must be > 0");
  if (evaluation.ks.empty()) throw InvalidArgument("evaluation ks must not be empty");
  for (auto k : evaluation.ks)
    if (k == 0) throw InvalidArgument("evaluation ks must be >= 1");
}

RunConfig run_config_from_json(const json& j) {
  Section root(j, "config");
  std::string profile = "lastfm";
  root.read("profile", profile);
  RunConfig c = profile_defaults(profile);
  if (const json* p = root.sub("pipeline")) {
    Section s(*p, "pipeline");
    s.read("gap_threshold_seconds", c.pipeline.gap_threshold);
    s.read("max_session_length", c.pipeline.max_session_length);
    s.read("train_fraction", c.pipeline.train_fraction);
    s.read("min_sessions", c.pipeline.min_sessions);
    s.finish();
  }
  if (const json* p = root.sub("bucketizer")) c.bucketizer = bucketizer_from_json(*p, c.bucketizer);
  if (const json* p = root.sub("quadrature")) c.quadrature = quadrature_from_json(*p, c.quadrature);
  if (const json* p = root.sub("model")) c.model = model_config_from_json(*p, c.model);
  if (const json* p = root.sub("training")) c.training = train_config_from_json(*p, c.training);
  if (const json* p = root.sub("hawkes")) {
    Section s(*p, "hawkes");
    if (const json* w = s.sub("short")) c.hawkes.short_window = fit_config_from_json(*w, "hawkes.short", c.hawkes.short_window);
    if (const json* w = s.sub("long")) c.hawkes.long_window = fit_config_from_json(*w, "hawkes.long", c.hawkes.long_window);
    s.read("prime_events", c.hawkes.prime_events);
    s.finish();
  }
  if (const json* p = root.sub("evaluation")) {
    Section s(*p, "evaluation");
    s.read("bucket_width_days", c.evaluation.bucket_width_days);
    s.read("ks", c.evaluation.ks);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  return {{"profile", c.profile},
          {"pipeline",
           {{"gap_threshold_seconds", c.pipeline.gap_threshold},
            {"max_session_length", c.pipeline.max_session_length},
            {"train_fraction", c.pipeline.train_fraction},
            {"min_sessions", c.pipeline.min_sessions}}},
          {"bucketizer", to_json(c.bucketizer)},
          {"quadrature", to_json(c.quadrature)},
          {"model", to_json(c.model)},
          {"training", to_json(c.training)},
          {"hawkes",
           {{"short", to_json(c.hawkes.short_window)},
            {"long", to_json(c.hawkes.long_window)},
            {"prime_events", c.hawkes.prime_events}}},
          {"evaluation", {{"bucket_width_days", c.evaluation.bucket_width_days}, {"ks", c.evaluation.ks}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace thrnn
