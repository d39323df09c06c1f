#include "thrnn/point_process.hpp"

#include <cmath>
#include <sstream>

#include "thrnn/error.hpp"

namespace thrnn {

namespace {

void check_exponent(double e, double s, double w, double g) {
  if (!(e <= kMaxExponent) || !std::isfinite(s) || !std::isfinite(w)) {
    std::ostringstream os;
    os << "time head exponent " << e << " exceeds " << kMaxExponent << " (v.h + b = " << s << ", w = " << w
       << ", g = " << g << "); time-head parameters are diverging";
    throw NumericOverflow(os.str());
  }
}

// expm1(x) / x; the series covers the w -> 0 limit without a division.
double psi(double x) {
  if (std::abs(x) < 1e-5) return 1.0 + x / 2.0 + x * x / 6.0;
  return std::expm1(x) / x;
}

// (x e^x - expm1(x)) / x^2
double phi(double x) {
  if (std::abs(x) < 1e-2) {
    return 0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0 + x * x * x * x / 144.0;
  }
  return (x * std::exp(x) - std::expm1(x)) / (x * x);
}

template <typename F>
double trapezoid(F&& f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n - 1);
  double acc = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i + 1 < n; ++i) acc += f(a + h * static_cast<double>(i));
  return acc * h;
}

}  // namespace

double TimeHeadParams::bias_term(std::span<const double> h) const {
  if (h.size() != v.size()) throw ShapeError("time head: hidden state has the wrong dimension");
  double s = b;
  for (std::size_t j = 0; j < h.size(); ++j) s += v[j] * h[j];
  return s;
}

TimeHeadParams TimeHead::values() const {
  TimeHeadParams p;
  p.v.assign(v.value.data().begin(), v.value.data().end());
  p.w = w.value[0];
  p.b = b.value[0];
  return p;
}

void QuadratureConfig::validate() const {
  if (!(cutoff > 0.0)) throw InvalidArgument("quadrature cutoff must be > 0");
  if (num_points < 64) throw InvalidArgument("quadrature needs at least 64 points");
}

void TimeLossConfig::validate() const {
  if (!(alpha_exp > 0.0 && alpha_exp <= 1.0)) throw InvalidArgument("alpha_exp must lie in (0, 1]");
  if (!(time_unit > 0.0)) throw InvalidArgument("time_unit must be > 0");
}

double intensity_at(double s, double w, double g) {
  const double e = s + w * g;
  check_exponent(e, s, w, g);
  return std::exp(e);
}

double log_density_at(double s, double w, double g) {
  const double e = s + w * g;
  check_exponent(e, s, w, g);
  check_exponent(s, s, w, g);
  return e - std::exp(s) * g * psi(w * g);
}

double density_cdf_at(double s, double w, double t) {
  if (t <= 0.0) return 0.0;
  check_exponent(s + w * t, s, w, t);
  return -std::expm1(-std::exp(s) * t * psi(w * t));
}

double density_total_mass_at(double s, double w) {
  if (w >= 0.0 || std::abs(w) < kSmallTimeWeight) return 1.0;
  return -std::expm1(-std::exp(s) / -w);
}

double intensity(std::span<const double> h, double g, const TimeHeadParams& p) {
  if (g < 0.0) throw InvalidArgument("elapsed time must be >= 0");
  return intensity_at(p.bias_term(h), p.w, g);
}

double log_density(std::span<const double> h, double g, const TimeHeadParams& p) {
  if (g < 0.0) throw InvalidArgument("elapsed time must be >= 0");
  return log_density_at(p.bias_term(h), p.w, g);
}

TimeLossTerms time_loss_terms(double s, double w, double g_target, double alpha_exp) {
  if (g_target < 0.0) throw InvalidArgument("target gap must be >= 0");
  const double g = alpha_exp == 1.0 ? g_target : std::pow(g_target, alpha_exp);
  TimeLossTerms t;
  t.loss = -log_density_at(s, w, g);
  const double es = std::exp(s);
  t.d_s = -1.0 + es * g * psi(w * g);
  t.d_w = -g + es * g * g * phi(w * g);
  return t;
}

double time_loss(std::span<const double> h, double g_target, const TimeHeadParams& p, const TimeLossConfig& cfg,
                 bool masked) {
  if (masked) return 0.0;
  return time_loss_terms(p.bias_term(h), p.w, g_target, cfg.alpha_exp).loss;
}

double expected_return_time_at(double s, double w, const QuadratureConfig& q) {
  q.validate();
  return trapezoid([&](double t) { return t * std::exp(log_density_at(s, w, t)); }, 0.0, q.cutoff, q.num_points);
}

double density_mass_at(double s, double w, const QuadratureConfig& q) {
  q.validate();
  return trapezoid([&](double t) { return std::exp(log_density_at(s, w, t)); }, 0.0, q.cutoff, q.num_points);
}

double expected_return_time(std::span<const double> h, const TimeHeadParams& p, const QuadratureConfig& q) {
  return expected_return_time_at(p.bias_term(h), p.w, q);
}

Tape::Var time_loss(Tape& tape, Tape::Var h, TimeHead& head, double g_target, const TimeLossConfig& cfg,
                    bool masked) {
  if (masked) return tape.constant({0.0});
  const auto hv = tape.value(h);
  if (hv.size() != head.v.value.cols()) throw ShapeError("time head: hidden state has the wrong dimension");
  double s = head.b.value[0];
  for (std::size_t j = 0; j < hv.size(); ++j) s += head.v.value[j] * hv[j];
  const TimeLossTerms terms = time_loss_terms(s, head.w.value[0], g_target, cfg.alpha_exp);
  TimeHead* hp = &head;
  return tape.record({terms.loss}, [hp, h, terms](Tape& t, std::span<const double> g) {
    const double ds = g[0] * terms.d_s;
    const auto hv = t.value(h);
    auto gh = t.grad(h);
    for (std::size_t j = 0; j < hv.size(); ++j) {
      hp->v.grad[j] += ds * hv[j];
      gh[j] += ds * hp->v.value[j];
    }
    hp->b.grad[0] += ds;
    hp->w.grad[0] += g[0] * terms.d_w;
  });
}

}  // namespace thrnn
