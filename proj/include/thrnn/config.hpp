#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "thrnn/data_pipeline.hpp"
#include "thrnn/hawkes.hpp"
#include "thrnn/model.hpp"
#include "thrnn/point_process.hpp"
#include "thrnn/trainer.hpp"

namespace thrnn {

struct HawkesConfig {
  hawkes::FitConfig short_window{hawkes::Window::LastK, 15};
  hawkes::FitConfig long_window{hawkes::Window::FullHistory, 15};
  std::size_t prime_events = 15;
};

struct EvaluationConfig {
  double bucket_width_days = 1.0;
  std::vector<std::size_t> ks{5, 10, 20};
};

// One static configuration shared by every command. Profiles only change
// the starting values; a config file overrides individual keys.
struct RunConfig {
  std::string profile = "lastfm";
  PipelineConfig pipeline;
  GapBucketizer bucketizer;
  QuadratureConfig quadrature;
  ModelConfig model;
  TrainConfig training;
  HawkesConfig hawkes;
  EvaluationConfig evaluation;

  void validate() const;
  double cutoff_days() const { return quadrature.cutoff * model.time_unit / 86400.0; }
};

// "lastfm", "reddit" or "synthetic".
RunConfig profile_defaults(std::string_view profile);

// Keys not listed in the documented layout are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
nlohmann::json to_json(const GapBucketizer& c);
GapBucketizer bucketizer_from_json(const nlohmann::json& j, GapBucketizer base = {});
nlohmann::json to_json(const QuadratureConfig& c);
QuadratureConfig quadrature_from_json(const nlohmann::json& j, QuadratureConfig base = {});
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace thrnn
