#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "thrnn/data_pipeline.hpp"
#include "thrnn/error.hpp"
#include "thrnn/model.hpp"
#include "thrnn/optimizer.hpp"
#include "thrnn/point_process.hpp"

namespace thrnn {

struct TrainConfig {
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double learning_rate = 1e-3;
  double learning_rate_time = 1e-4;
  double time_clip_norm = 5.0;
  bool validate_each_epoch = true;

  void validate() const;
};

// Everything needed for inference: configuration, weights and vocabularies.
struct Model {
  ModelConfig config;
  ModelParams params;
  GapBucketizer bucketizer;
  QuadratureConfig quadrature;
  std::vector<std::string> item_ids;
  std::vector<std::string> user_ids;

  // Gap in model time units, clipped to the quadrature cutoff.
  double gap_in_model_units(Seconds gap) const;
  HistoryEntry history_entry(std::vector<double> state, const Session& s) const;
};

// Sizes the config to the split's vocabularies and initialises weights.
Model make_model(const DatasetSplit& split, ModelConfig cfg, const GapBucketizer& bucketizer,
                 const QuadratureConfig& quadrature, std::uint64_t seed);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based, continues across resumes
  double train_loss = 0.0;
  double train_time_loss = 0.0;
  double train_rec_loss = 0.0;
  std::size_t batches = 0;
  std::size_t skipped_updates = 0;
  bool validated = false;
  double val_recall5 = 0.0;
  double val_mae_days = 0.0;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

// User-parallel mini-batches: each batch holds the j-th train session of up to
// batch_size users. Session states are recorded as sessions are consumed and
// feed later sessions of the same user within the epoch.
class Trainer {
 public:
  Trainer(Model model, TrainConfig cfg);
  Trainer(Model model, TrainConfig cfg, Adam optimizer, std::size_t epochs_done);

  EpochMetrics run_epoch(const DatasetSplit& split);
  std::vector<EpochMetrics> fit(const DatasetSplit& split, std::size_t epochs,
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const Adam& optimizer() const { return adam_; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t epochs_done() const { return epochs_done_; }

 private:
  Model model_;
  TrainConfig cfg_;
  Adam adam_;
  std::size_t epochs_done_ = 0;
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> epochs;
};

TrainResult train(const DatasetSplit& split, const ModelConfig& cfg, const TrainConfig& tcfg,
                  const GapBucketizer& bucketizer, const QuadratureConfig& quadrature);

}  // namespace thrnn
