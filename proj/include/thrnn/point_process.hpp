#pragma once

#include <span>
#include <vector>

#include "thrnn/array2.hpp"
#include "thrnn/tape.hpp"

namespace thrnn {

// Inter-session return-time density driven by a hidden state h:
//   intensity   lambda(g) = exp(v.h + w g + b)
//   log density log f(g)  = (v.h + w g + b) + (exp(v.h + b) - exp(v.h + w g + b)) / w
// with g the elapsed model time since the previous session ended.

inline constexpr double kSmallTimeWeight = 1e-6;  // |w| below this uses the w -> 0 limit
inline constexpr double kMaxExponent = 700.0;

struct TimeHeadParams {
  std::vector<double> v;
  double w = -0.1;
  double b = 0.0;

  double bias_term(std::span<const double> h) const;  // v.h + b
};

// Trainable storage of the time head.
struct TimeHead {
  Parameter v;  // 1 x H
  Parameter w;  // 1 x 1
  Parameter b;  // 1 x 1

  TimeHead() = default;
  explicit TimeHead(std::size_t hidden_dim) : v("time.v", 1, hidden_dim), w("time.w", 1, 1), b("time.b", 1, 1) {}

  TimeHeadParams values() const;
};

struct QuadratureConfig {
  double cutoff = 30.0;  // model time units
  std::size_t num_points = 2048;

  void validate() const;
};

struct TimeLossConfig {
  double alpha_exp = 1.0;
  double time_unit = 86400.0;  // seconds per model time unit

  void validate() const;
};

double intensity(std::span<const double> h, double g, const TimeHeadParams& p);
double log_density(std::span<const double> h, double g, const TimeHeadParams& p);

// Same quantities parameterised by s = v.h + b directly.
double intensity_at(double s, double w, double g);
double log_density_at(double s, double w, double g);
// Closed-form CDF F(t) = 1 - exp((exp(s) - exp(s + w t)) / w).
double density_cdf_at(double s, double w, double t);
// Limit of the CDF as t -> infinity; below 1 when w < 0.
double density_total_mass_at(double s, double w);

struct TimeLossTerms {
  double loss = 0.0;
  double d_s = 0.0;  // dloss / d(v.h + b)
  double d_w = 0.0;  // dloss / dw
};

// -log f evaluated at g_target^alpha_exp, with analytic derivatives.
TimeLossTerms time_loss_terms(double s, double w, double g_target, double alpha_exp);

double time_loss(std::span<const double> h, double g_target, const TimeHeadParams& p, const TimeLossConfig& cfg,
                 bool masked = false);

// Trapezoid rule for int_0^cutoff t f(t) dt, no renormalisation.
double expected_return_time(std::span<const double> h, const TimeHeadParams& p, const QuadratureConfig& q);
double expected_return_time_at(double s, double w, const QuadratureConfig& q);
// Trapezoid rule for int_0^cutoff f(t) dt.
double density_mass_at(double s, double w, const QuadratureConfig& q);

// Records the time loss on a tape; gradient flows into h and the head.
Tape::Var time_loss(Tape& tape, Tape::Var h, TimeHead& head, double g_target, const TimeLossConfig& cfg,
                    bool masked = false);

}  // namespace thrnn
