#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "thrnn/array2.hpp"
#include "thrnn/data_pipeline.hpp"
#include "thrnn/point_process.hpp"
#include "thrnn/tape.hpp"

namespace thrnn {

struct ModelConfig {
  std::size_t num_items = 0;
  std::size_t num_users = 0;
  std::size_t num_gap_buckets = 360;
  std::size_t item_embedding_dim = 100;
  std::size_t user_embedding_dim = 10;
  std::size_t gap_embedding_dim = 5;
  std::size_t hidden_dim_inter = 100;
  std::size_t hidden_dim_intra = 100;
  std::size_t max_session_reps = 15;
  double dropout_rate = 0.0;
  double loss_weight_time = 0.45;
  double loss_weight_rec = 0.45;
  double alpha_exp = 1.0;
  std::size_t batch_size = 100;
  // When false the gap and user embeddings are held at zero, which turns
  // the model into a plain hierarchical GRU.
  bool context_embeddings = true;
  double time_unit = 86400.0;

  void validate() const;
  std::size_t hidden_dim() const { return hidden_dim_inter; }
  std::size_t representation_dim() const { return hidden_dim_intra + gap_embedding_dim + user_embedding_dim; }
  TimeLossConfig time_loss() const { return {alpha_exp, time_unit}; }
};

struct ModelParams {
  Parameter item_embedding;  // N x E
  Parameter user_embedding;  // U x Du
  Parameter gap_embedding;   // B x Dg
  GruParams inter;           // input: session representation
  GruParams intra;           // input: item embedding
  Parameter output_weight;   // N x H
  Parameter output_bias;     // N x 1
  TimeHead time;

  // Uniform +-sqrt(6 / (fan_in + fan_out)) for matrices, zero biases,
  // +-0.05 for embeddings, w = -0.1.
  static ModelParams initialize(const ModelConfig& cfg, std::uint64_t seed);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> time_head();
  std::vector<Parameter*> non_time();
  void zero_grad();
};

// A past session as seen by the inter-session GRU: the detached final
// intra-session state plus the bucket of the gap that preceded it.
struct HistoryEntry {
  std::vector<double> session_state;
  std::size_t gap_bucket = 0;
};

struct TrainingExample {
  UserIndex user = 0;
  std::vector<HistoryEntry> history;  // chronological; only the tail of max_session_reps is used
  std::vector<ItemIndex> items;       // inputs items[0..n-1), targets items[1..n)
  double gap_target = 0.0;            // model time units
  bool gap_masked = true;
};

struct ForwardResult {
  std::vector<Tape::Var> scores;  // one per input step
  Tape::Var inter_state;
  Tape::Var last_intra_state;
};

// Records the full forward pass. `dropout_rng` == nullptr disables dropout.
ForwardResult forward(Tape& tape, const TrainingExample& ex, ModelParams& params, const ModelConfig& cfg,
                      std::mt19937_64* dropout_rng = nullptr);

struct LossParts {
  double time = 0.0;  // mean over examples with a gap target
  double rec = 0.0;   // mean over recommendation steps
  std::size_t time_count = 0;
  std::size_t rec_count = 0;
  double total = 0.0;
};

double combine_losses(double time_loss, double rec_loss, const ModelConfig& cfg);

// Weighted mean of the two losses over a batch; empty parts are omitted.
Tape::Var joint_loss(Tape& tape, std::span<const ForwardResult> results, std::span<const TrainingExample> examples,
                     ModelParams& params, const ModelConfig& cfg, LossParts* parts = nullptr);

// Inference path built from the plain forward functions (no tape).
std::vector<double> inter_state(const ModelParams& params, const ModelConfig& cfg, UserIndex user,
                                std::span<const HistoryEntry> history);

struct SessionPass {
  std::vector<std::vector<double>> scores;  // after each consumed item
  std::vector<double> final_state;
};
SessionPass run_session(const ModelParams& params, const ModelConfig& cfg, std::span<const double> initial_state,
                        std::span<const ItemIndex> items, bool keep_scores = true);

// Top-k indices by descending score; ties go to the lower index.
std::vector<ItemIndex> top_k(std::span<const double> scores, std::size_t k);
// 1 + number of items scoring strictly higher than the target.
std::size_t rank_of(std::span<const double> scores, ItemIndex target);

}  // namespace thrnn
