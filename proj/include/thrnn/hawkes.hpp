#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thrnn/point_process.hpp"

namespace thrnn::hawkes {

// lambda(t) = gamma0 + excitation * sum_j exp(-decay (t - t_j)).
// The kernel is not normalised: excitation multiplies exp(-decay dt) directly,
// so the branching ratio is excitation / decay.
struct HawkesParams {
  double gamma0 = 1.0;
  double excitation = 0.0;
  double decay = 1.0;

  void validate() const;
  double branching_ratio() const { return excitation / decay; }
};

enum class Window { LastK, FullHistory };

struct FitConfig {
  Window window = Window::LastK;
  std::size_t last_k = 15;
  std::size_t max_iterations = 1000;
  double tolerance = 1e-10;       // relative NLL change
  double max_branching = 0.99;    // projection bound on excitation / decay

  void validate() const;
};

struct FitResult {
  HawkesParams params;
  std::size_t iterations = 0;
  bool converged = false;
  bool fallback = false;           // too few events; Poisson fallback used
  std::vector<double> nll_trace;   // NLL after each accepted iteration
};

// Uses the O(1)-per-event recursion over the history.
double intensity(double t, std::span<const double> history, const HawkesParams& p);

double nll(std::span<const double> events, const HawkesParams& p, double horizon);

struct NllGradient {
  double value = 0.0;
  double d_gamma0 = 0.0;
  double d_excitation = 0.0;
  double d_decay = 0.0;
};
NllGradient nll_with_gradient(std::span<const double> events, const HawkesParams& p, double horizon);

// Maximum likelihood over the configured window. With fewer than two events
// returns a Poisson process of rate `fallback_rate`.
FitResult fit(std::span<const double> events, const FitConfig& cfg, double fallback_rate);

// Sum over history of exp(-decay (t_n - t_j)), t_n the last event.
double excitation_state(std::span<const double> history, double decay);

// Expected time to the next event after the last one in `history`.
double predict_next(std::span<const double> history, const HawkesParams& p, const QuadratureConfig& q);

}  // namespace thrnn::hawkes
