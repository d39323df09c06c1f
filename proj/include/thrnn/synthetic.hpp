#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "thrnn/data_pipeline.hpp"
#include "thrnn/hawkes.hpp"
#include "thrnn/point_process.hpp"

namespace thrnn::synth {

// A positive gap distribution, parameterised in days.
struct GapDistribution {
  enum class Kind { Exponential, LogNormal, Constant };
  Kind kind = Kind::Exponential;
  double a = 1.0;  // exponential: mean; lognormal: mu of log; constant: value
  double b = 0.0;  // lognormal: sigma

  double sample(std::mt19937_64& rng) const;
  double cdf(double x) const;
  double mean() const;
};

struct GapComponent {
  double weight = 1.0;
  GapDistribution dist;
};

double mixture_cdf(std::span<const GapComponent> mixture, double x);
double mixture_mean(std::span<const GapComponent> mixture);

// Latent per-session state that drives both which items appear and the gap
// that follows the session, so item history carries gap information.
struct ContextCoupling {
  std::vector<std::vector<double>> state_transition;  // K x K, row-stochastic
  std::vector<std::vector<GapComponent>> gap_by_state;
  std::vector<std::pair<ItemIndex, ItemIndex>> start_items_by_state;  // [first, last) item range
};

struct SynthSpec {
  std::size_t num_users = 200;
  std::size_t sessions_per_user = 60;
  std::size_t min_session_length = 2;
  std::size_t max_session_length = 8;
  std::vector<std::vector<double>> item_transition;  // row-stochastic, N x N
  std::vector<GapComponent> gap_mixture;
  std::optional<ContextCoupling> coupling;
  double train_fraction = 0.8;
  Seconds item_spacing = 60;  // seconds between consecutive interactions in a session

  void validate() const;
  std::size_t num_items() const { return item_transition.size(); }
};

// Draws a corpus deterministically from (spec, seed). Self-transitions are
// rejected while walking the chain so sessions never repeat an item back to
// back; the effective chain is the row renormalised without its diagonal.
DatasetSplit generate_corpus(const SynthSpec& spec, std::uint64_t seed);

// Transition matrix with the diagonal removed and rows renormalised.
std::vector<std::vector<double>> effective_transition(const std::vector<std::vector<double>>& m);

// Exact Recall@k of the Bayes-optimal first-order predictor: for each source
// item the k most probable successors, weighted by source frequency.
double bayes_recall_at_k(const std::vector<std::vector<double>>& effective, std::span<const double> source_weights,
                         std::size_t k);

// Banded "self-informative" chain: each item has a few strong successors.
std::vector<std::vector<double>> banded_transition(std::size_t n, std::span<const double> successor_probs);

// Inverse-CDF sample of the time-head density.
double sample_gap_from_model_density(double s, double w, std::mt19937_64& rng);
double sample_gap_from_model_density(std::span<const double> h, const TimeHeadParams& p, std::uint64_t seed);

// Ogata thinning for a univariate exponential-kernel Hawkes process.
std::vector<double> simulate_hawkes(const hawkes::HawkesParams& p, std::size_t num_events, std::mt19937_64& rng);
// Time from the last event to the next one, given the excitation state there.
double simulate_hawkes_next_gap(const hawkes::HawkesParams& p, double excitation_state, std::mt19937_64& rng);

SynthSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const SynthSpec& spec);

}  // namespace thrnn::synth
