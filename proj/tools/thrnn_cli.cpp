#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thrnn/commands.hpp"
#include "thrnn/error.hpp"

namespace {

// Flags override the profile and config file, in that order.
struct Overrides {
  std::string profile;
  std::string config;
  std::optional<double> alpha_exp;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--profile", o.profile, "Default profile: lastfm, reddit or synthetic");
  cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
}

thrnn::RunConfig resolve(const Overrides& o) {
  thrnn::RunConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    nlohmann::json j = nlohmann::json::parse(in);
    if (!o.profile.empty()) j["profile"] = o.profile;
    cfg = thrnn::run_config_from_json(j);
  } else {
    cfg = thrnn::profile_defaults(o.profile.empty() ? "lastfm" : o.profile);
  }
  if (o.alpha_exp) cfg.model.alpha_exp = *o.alpha_exp;
  if (o.epochs) cfg.training.epochs = *o.epochs;
  if (o.seed) cfg.training.seed = *o.seed;
  cfg.validate();
  return cfg;
}

// Environment variables may supply paths left off the command line.
std::string path_or_env(const std::string& value, const char* env) {
  if (!value.empty()) return value;
  if (const char* v = std::getenv(env)) return v;
  throw thrnn::InvalidArgument(std::string("missing path (pass it or set ") + env + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint next-item and return-time prediction"};
  app.require_subcommand(1);

  Overrides o;
  std::string dataset, input, output, split, checkpoint, resume, out_dir, log_path, spec, history;
  std::vector<std::string> checkpoints;
  std::vector<std::string> baselines = thrnn::kBaselines;
  std::uint64_t synth_seed = 1;
  std::size_t k = 5;

  auto* pre = app.add_subcommand("preprocess", "Sessionize raw logs into a train/test split");
  pre->add_option("--dataset", dataset, "lastfm, reddit or synthetic")->required();
  pre->add_option("--input", input, "Raw log (or generator spec for synthetic)");
  pre->add_option("--output", output, "Split file to write")->required();
  add_config_flags(pre, o);
  pre->add_option("--seed", o.seed, "Generator seed for synthetic input");

  auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus from a spec");
  syn->add_option("--spec", spec, "Generator spec (JSON)")->required()->check(CLI::ExistingFile);
  syn->add_option("--output", output, "Split file to write")->required();
  syn->add_option("--seed", synth_seed, "Generator seed");

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->add_option("--split", split, "Split file");
  tr->add_option("--output", checkpoint, "Checkpoint to write")->required();
  tr->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  tr->add_option("--log", log_path, "Epoch log file (default: stdout)");
  add_config_flags(tr, o);
  tr->add_option("--alpha-exp", o.alpha_exp, "Exponent applied to gaps in the time loss");
  tr->add_option("--epochs", o.epochs, "Epochs to run");
  tr->add_option("--seed", o.seed, "Training seed");

  auto* ev = app.add_subcommand("evaluate", "Evaluate checkpoints and baselines");
  ev->add_option("--split", split, "Split file");
  ev->add_option("--checkpoint", checkpoints, "Checkpoint(s); several are aggregated")->check(CLI::ExistingFile);
  ev->add_option("--baselines", baselines, "Subset of hawkes_short hawkes_long mean_gap popularity");
  ev->add_option("--no-baselines", [&](const CLI::results_t&) { baselines.clear(); return true; },
                 "Skip all baselines")->expected(0);
  ev->add_option("--output-dir", out_dir, "Directory for reports and plot data")->required();
  add_config_flags(ev, o);

  auto* pr = app.add_subcommand("predict", "Top-k next items and return time for one user");
  pr->add_option("--checkpoint", checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  pr->add_option("--history", history, "History JSON file")->required()->check(CLI::ExistingFile);
  pr->add_option("-k", k, "Number of items");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre) {
      const auto stats = thrnn::cmd_preprocess(dataset, path_or_env(input, "THRNN_INPUT"), output, resolve(o));
      std::cout << stats.dump() << '\n';
    } else if (*syn) {
      std::cout << thrnn::cmd_synth(spec, output, synth_seed).dump() << '\n';
    } else if (*tr) {
      const auto cfg = resolve(o);
      std::optional<std::filesystem::path> from;
      if (!resume.empty()) from = resume;
      std::string digest;
      const std::string split_path = path_or_env(split, "THRNN_SPLIT");
      if (log_path.empty()) {
        digest = thrnn::cmd_train(split_path, checkpoint, cfg, from, std::cout);
      } else {
        std::ofstream log(log_path);
        if (!log) throw thrnn::Error("cannot open " + log_path + " for writing");
        digest = thrnn::cmd_train(split_path, checkpoint, cfg, from, log);
      }
      std::cerr << "checkpoint " << checkpoint << " digest " << digest << '\n';
    } else if (*ev) {
      std::vector<std::filesystem::path> paths(checkpoints.begin(), checkpoints.end());
      const auto reports = thrnn::cmd_evaluate(paths, path_or_env(split, "THRNN_SPLIT"), baselines, out_dir, resolve(o));
      for (const auto& r : reports) {
        nlohmann::json line{{"model", r.model}};
        if (r.has_ranking) line["recall5"] = r.recall.count(5) ? r.recall.at(5) : 0.0;
        if (r.has_time) line["mae_days"] = r.mae.overall_mae_days;
        std::cout << line.dump() << '\n';
      }
    } else if (*pr) {
      std::ifstream in(history);
      nlohmann::json h;
      try {
        h = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw thrnn::FormatError(std::string("history is not valid JSON: ") + e.what());
      }
      std::cout << thrnn::cmd_predict(checkpoint, h, k).dump() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
