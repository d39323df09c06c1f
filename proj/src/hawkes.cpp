#include "thrnn/hawkes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "thrnn/error.hpp"

namespace thrnn::hawkes {

void HawkesParams::validate() const {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw InvalidArgument("hawkes gamma0 must be > 0");
  if (!(excitation >= 0.0) || !std::isfinite(excitation)) throw InvalidArgument("hawkes excitation must be >= 0");
  if (!(decay > 0.0) || !std::isfinite(decay)) throw InvalidArgument("hawkes decay must be > 0");
}

void FitConfig::validate() const {
  if (window == Window::LastK && last_k < 2) throw InvalidArgument("hawkes window needs last_k >= 2");
  if (max_iterations == 0) throw InvalidArgument("hawkes max_iterations must be > 0");
  if (!(tolerance > 0.0)) throw InvalidArgument("hawkes tolerance must be > 0");
  if (!(max_branching > 0.0 && max_branching < 1.0)) throw InvalidArgument("max_branching must lie in (0, 1)");
}

double intensity(double t, std::span<const double> history, const HawkesParams& p) {
  if (history.empty()) return p.gamma0;
  double state = 0.0;  // sum_j exp(-decay (t_last - t_j)) over events seen so far
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) state *= std::exp(-p.decay * (history[i] - history[i - 1]));
    state += 1.0;
  }
  return p.gamma0 + p.excitation * state * std::exp(-p.decay * (t - history.back()));
}

double excitation_state(std::span<const double> history, double decay) {
  double state = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) state *= std::exp(-decay * (history[i] - history[i - 1]));
    state += 1.0;
  }
  return state;
}

NllGradient nll_with_gradient(std::span<const double> events, const HawkesParams& p, double horizon) {
  p.validate();
  const double mu = p.gamma0;
  const double a = p.excitation;
  const double beta = p.decay;
  NllGradient g;
  double A = 0.0;  // sum_{j<i} exp(-beta (t_i - t_j))
  double B = 0.0;  // dA / dbeta
  double log_sum = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i] < 0.0 || events[i] > horizon) throw InvalidArgument("hawkes event outside [0, horizon]");
    if (i > 0) {
      const double dt = events[i] - events[i - 1];
      if (dt < 0.0) throw InvalidArgument("hawkes events not sorted");
      const double e = std::exp(-beta * dt);
      B = e * (B - dt * (1.0 + A));
      A = e * (1.0 + A);
    }
    const double lam = mu + a * A;
    log_sum += std::log(lam);
    g.d_gamma0 -= 1.0 / lam;
    g.d_excitation -= A / lam;
    g.d_decay -= a * B / lam;
  }
  double kernel_mass = 0.0;  // sum_j (1 - exp(-beta (T - t_j)))
  double kernel_tail = 0.0;  // sum_j (T - t_j) exp(-beta (T - t_j))
  for (double t : events) {
    const double tau = horizon - t;
    const double e = std::exp(-beta * tau);
    kernel_mass += -std::expm1(-beta * tau);
    kernel_tail += tau * e;
  }
  g.value = -log_sum + mu * horizon + a / beta * kernel_mass;
  g.d_gamma0 += horizon;
  g.d_excitation += kernel_mass / beta;
  g.d_decay += -a / (beta * beta) * kernel_mass + a / beta * kernel_tail;
  return g;
}

double nll(std::span<const double> events, const HawkesParams& p, double horizon) {
  return nll_with_gradient(events, p, horizon).value;
}

namespace {

using Theta = std::array<double, 3>;  // log gamma0, log excitation, log decay

constexpr double kMinLog = -23.0;  // exp(-23) ~ 1e-10
constexpr double kMaxLog = 14.0;

HawkesParams from_theta(const Theta& th) { return {std::exp(th[0]), std::exp(th[1]), std::exp(th[2])}; }

Theta project(Theta th, double max_branching) {
  for (double& v : th) v = std::clamp(v, kMinLog, kMaxLog);
  th[1] = std::min(th[1], th[2] + std::log(max_branching));
  return th;
}

}  // namespace

FitResult fit(std::span<const double> events, const FitConfig& cfg, double fallback_rate) {
  cfg.validate();
  std::span<const double> window = events;
  if (cfg.window == Window::LastK && window.size() > cfg.last_k) window = window.subspan(window.size() - cfg.last_k);

  FitResult out;
  const double horizon = window.empty() ? 0.0 : window.back() - window.front();
  if (window.size() < 2 || !(horizon > 0.0)) {
    if (!(fallback_rate > 0.0) || !std::isfinite(fallback_rate))
      throw InvalidArgument("hawkes fallback rate must be > 0");
    out.params = {fallback_rate, 0.0, 1.0};
    out.fallback = true;
    out.converged = true;
    return out;
  }
  std::vector<double> shifted(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) shifted[i] = window[i] - window.front();

  const double n = static_cast<double>(shifted.size());
  const double rate = n / horizon;
  Theta th = project({std::log(0.5 * rate), std::log(0.5 * rate), std::log(rate)}, cfg.max_branching);

  auto evaluate = [&](const Theta& t, Theta* grad) {
    const HawkesParams p = from_theta(t);
    const NllGradient g = nll_with_gradient(shifted, p, horizon);
    if (grad) *grad = {g.d_gamma0 * p.gamma0, g.d_excitation * p.excitation, g.d_decay * p.decay};
    return g.value;
  };

  Theta grad{};
  double f = evaluate(th, &grad);
  out.nll_trace.push_back(f);
  Theta prev_th{};
  Theta prev_grad{};
  bool have_prev = false;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    double gnorm2 = 0.0;
    for (double v : grad) gnorm2 += v * v;
    if (gnorm2 == 0.0) {
      out.converged = true;
      break;
    }
    // Barzilai-Borwein step length, safeguarded by Armijo backtracking.
    double step = 1e-2 / std::sqrt(gnorm2);
    if (have_prev) {
      double sy = 0.0;
      double ss = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double s = th[k] - prev_th[k];
        const double y = grad[k] - prev_grad[k];
        sy += s * y;
        ss += s * s;
      }
      if (sy > 0.0) step = ss / sy;
    }
    bool accepted = false;
    Theta trial{};
    Theta trial_grad{};
    double trial_f = f;
    for (int bt = 0; bt < 60; ++bt) {
      for (int k = 0; k < 3; ++k) trial[k] = th[k] - step * grad[k];
      trial = project(trial, cfg.max_branching);
      double decrease = 0.0;
      for (int k = 0; k < 3; ++k) decrease += grad[k] * (trial[k] - th[k]);
      trial_f = evaluate(trial, &trial_grad);
      if (std::isfinite(trial_f) && trial_f <= f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    out.iterations = it + 1;
    if (!accepted) {
      out.converged = true;  // no descent direction left inside the feasible set
      break;
    }
    const double rel = std::abs(f - trial_f) / std::max(1.0, std::abs(f));
    prev_th = th;
    prev_grad = grad;
    have_prev = true;
    th = trial;
    grad = trial_grad;
    f = trial_f;
    out.nll_trace.push_back(f);
    if (rel < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.params = from_theta(th);
  return out;
}

double predict_next(std::span<const double> history, const HawkesParams& p, const QuadratureConfig& q) {
  p.validate();
  q.validate();
  const double state = excitation_state(history, p.decay);
  const double mu = p.gamma0;
  const double ac = p.excitation * state;
  const double beta = p.decay;
  const std::size_t n = q.num_points;
  const double h = q.cutoff / static_cast<double>(n - 1);
  auto integrand = [&](double t) {
    const double decay_t = std::exp(-beta * t);
    const double lam = mu + ac * decay_t;
    const double compensator = mu * t - ac / beta * std::expm1(-beta * t);
    return t * lam * std::exp(-compensator);
  };
  double acc = 0.5 * (integrand(0.0) + integrand(q.cutoff));
  for (std::size_t i = 1; i + 1 < n; ++i) acc += integrand(h * static_cast<double>(i));
  return acc * h;
}

}  // namespace thrnn::hawkes
