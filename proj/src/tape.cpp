#include "thrnn/tape.hpp"

#include <cmath>
#include <sstream>

#include "thrnn/error.hpp"

namespace thrnn {

namespace {

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

struct GruCache {
  std::vector<double> r, z, c, rh, out;
};

GruCache gru_step(std::span<const double> x, std::span<const double> h, const GruParams& p) {
  const std::size_t H = p.hidden_dim();
  const std::size_t I = p.input_dim();
  if (x.size() != I || h.size() != H) {
    std::ostringstream os;
    os << "gru: expected input " << I << " and state " << H << ", got " << x.size() << " and " << h.size();
    throw ShapeError(os.str());
  }
  const Array2& W = p.input.value;
  const Array2& U = p.recurrent.value;
  const Array2& b = p.bias.value;
  std::vector<double> pre(3 * H);
  for (std::size_t k = 0; k < 3 * H; ++k) {
    double acc = b[k];
    const auto wr = W.row(k);
    for (std::size_t j = 0; j < I; ++j) acc += wr[j] * x[j];
    pre[k] = acc;
  }
  GruCache c;
  c.r.resize(H);
  c.z.resize(H);
  c.c.resize(H);
  c.rh.resize(H);
  c.out.resize(H);
  for (std::size_t k = 0; k < 2 * H; ++k) {
    const auto ur = U.row(k);
    double acc = pre[k];
    for (std::size_t j = 0; j < H; ++j) acc += ur[j] * h[j];
    pre[k] = acc;
  }
  for (std::size_t k = 0; k < H; ++k) {
    c.r[k] = sigmoid(pre[k]);
    c.z[k] = sigmoid(pre[H + k]);
    c.rh[k] = c.r[k] * h[k];
  }
  for (std::size_t k = 0; k < H; ++k) {
    const auto ur = U.row(2 * H + k);
    double acc = pre[2 * H + k];
    for (std::size_t j = 0; j < H; ++j) acc += ur[j] * c.rh[j];
    c.c[k] = std::tanh(acc);
    c.out[k] = (1.0 - c.z[k]) * h[k] + c.z[k] * c.c[k];
  }
  return c;
}

}  // namespace

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericOverflow(std::string("non-finite value produced by ") + what);
  }
}

GruParams::GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim)
    : input(prefix + ".input", 3 * hidden_dim, input_dim),
      recurrent(prefix + ".recurrent", 3 * hidden_dim, hidden_dim),
      bias(prefix + ".bias", 3 * hidden_dim, 1) {}

std::vector<double> gru_cell_forward(std::span<const double> x, std::span<const double> h, const GruParams& p) {
  auto out = gru_step(x, h, p).out;
  require_finite(out, "gru");
  return out;
}

std::vector<double> linear_forward(std::span<const double> x, const Array2& weight, const Array2& bias) {
  if (weight.cols() != x.size() || bias.size() != weight.rows()) {
    std::ostringstream os;
    os << "linear: weight " << weight.rows() << "x" << weight.cols() << ", bias " << bias.size() << ", input "
       << x.size();
    throw ShapeError(os.str());
  }
  std::vector<double> out(weight.rows());
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    const auto wr = weight.row(r);
    double acc = bias[r];
    for (std::size_t j = 0; j < x.size(); ++j) acc += wr[j] * x[j];
    out[r] = acc;
  }
  require_finite(out, "linear");
  return out;
}

Tape::Var Tape::push(std::vector<double> value, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Var Tape::record(std::vector<double> value, Backward backward) { return push(std::move(value), std::move(backward)); }

Tape::Var Tape::constant(std::vector<double> value) { return push(std::move(value), nullptr); }

Tape::Var Tape::embedding(Parameter& table, std::size_t row) {
  if (row >= table.value.rows()) {
    std::ostringstream os;
    os << "embedding '" << table.name << "': index " << row << " outside [0, " << table.value.rows() << ")";
    throw InvalidArgument(os.str());
  }
  const auto r = table.value.row(row);
  Parameter* tp = &table;
  return push(std::vector<double>(r.begin(), r.end()), [tp, row](Tape&, std::span<const double> g) {
    auto gr = tp->grad.row(row);
    for (std::size_t j = 0; j < g.size(); ++j) gr[j] += g[j];
  });
}

Tape::Var Tape::linear(Parameter& weight, Parameter& bias, Var x) {
  auto out = linear_forward(value(x), weight.value, bias.value);
  Parameter* wp = &weight;
  Parameter* bp = &bias;
  return push(std::move(out), [wp, bp, x](Tape& t, std::span<const double> g) {
    const auto xv = t.value(x);
    auto gx = t.grad(x);
    const std::size_t n = xv.size();
    for (std::size_t r = 0; r < g.size(); ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      bp->grad[r] += gr;
      auto dw = wp->grad.row(r);
      const auto w = wp->value.row(r);
      for (std::size_t j = 0; j < n; ++j) {
        dw[j] += gr * xv[j];
        gx[j] += gr * w[j];
      }
    }
  });
}

Tape::Var Tape::gru(GruParams& p, Var x, Var h) {
  GruCache cache = gru_step(value(x), value(h), p);
  require_finite(cache.out, "gru");
  auto out = cache.out;
  GruParams* pp = &p;
  return push(std::move(out), [pp, x, h, cache = std::move(cache)](Tape& t, std::span<const double> g) {
    const std::size_t H = pp->hidden_dim();
    const std::size_t I = pp->input_dim();
    const auto xv = t.value(x);
    const auto hv = t.value(h);
    auto gx = t.grad(x);
    auto gh = t.grad(h);
    const Array2& W = pp->input.value;
    const Array2& U = pp->recurrent.value;
    Array2& dW = pp->input.grad;
    Array2& dU = pp->recurrent.grad;
    Array2& db = pp->bias.grad;

    std::vector<double> da(3 * H);
    // candidate path
    for (std::size_t k = 0; k < H; ++k) {
      const double dc = g[k] * cache.z[k];
      da[2 * H + k] = dc * (1.0 - cache.c[k] * cache.c[k]);
      da[H + k] = g[k] * (cache.c[k] - hv[k]) * cache.z[k] * (1.0 - cache.z[k]);
      gh[k] += g[k] * (1.0 - cache.z[k]);
    }
    std::vector<double> drh(H, 0.0);
    for (std::size_t k = 0; k < H; ++k) {
      const double a = da[2 * H + k];
      if (a == 0.0) continue;
      const auto ur = U.row(2 * H + k);
      auto dur = dU.row(2 * H + k);
      for (std::size_t j = 0; j < H; ++j) {
        dur[j] += a * cache.rh[j];
        drh[j] += a * ur[j];
      }
    }
    for (std::size_t k = 0; k < H; ++k) {
      gh[k] += drh[k] * cache.r[k];
      da[k] = drh[k] * hv[k] * cache.r[k] * (1.0 - cache.r[k]);
    }
    // recurrent contributions of reset and update gates
    for (std::size_t k = 0; k < 2 * H; ++k) {
      const double a = da[k];
      if (a == 0.0) continue;
      const auto ur = U.row(k);
      auto dur = dU.row(k);
      for (std::size_t j = 0; j < H; ++j) {
        dur[j] += a * hv[j];
        gh[j] += a * ur[j];
      }
    }
    for (std::size_t k = 0; k < 3 * H; ++k) {
      const double a = da[k];
      if (a == 0.0) continue;
      db[k] += a;
      const auto wr = W.row(k);
      auto dwr = dW.row(k);
      for (std::size_t j = 0; j < I; ++j) {
        dwr[j] += a * xv[j];
        gx[j] += a * wr[j];
      }
    }
  });
}

Tape::Var Tape::concat(std::span<const Var> parts) {
  std::vector<double> out;
  std::vector<Var> ids(parts.begin(), parts.end());
  for (Var p : parts) {
    const auto v = value(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  return push(std::move(out), [ids = std::move(ids)](Tape& t, std::span<const double> g) {
    std::size_t offset = 0;
    for (Var p : ids) {
      auto gp = t.grad(p);
      for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += g[offset + j];
      offset += gp.size();
    }
  });
}

Tape::Var Tape::dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw InvalidArgument("dropout rate must be < 1");
  const auto xv = value(x);
  std::bernoulli_distribution keep(1.0 - rate);
  std::vector<double> mask(xv.size());
  std::vector<double> out(xv.size());
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t j = 0; j < xv.size(); ++j) {
    mask[j] = keep(rng) ? scale : 0.0;
    out[j] = xv[j] * mask[j];
  }
  return push(std::move(out), [x, mask = std::move(mask)](Tape& t, std::span<const double> g) {
    auto gx = t.grad(x);
    for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] * mask[j];
  });
}

Tape::Var Tape::softmax_xent(Var scores, std::size_t target, bool masked) {
  const auto s = value(scores);
  if (s.size() < 2) throw ShapeError("softmax_xent needs at least two scores");
  if (target >= s.size()) throw InvalidArgument("softmax_xent target out of range");
  if (masked) return push({0.0}, nullptr);
  double mx = s[0];
  for (double v : s) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : s) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  const double loss = lse - s[target];
  require_finite(std::span<const double>(&loss, 1), "softmax_xent");
  return push({loss}, [scores, target, lse](Tape& t, std::span<const double> g) {
    const auto sv = t.value(scores);
    auto gs = t.grad(scores);
    for (std::size_t j = 0; j < sv.size(); ++j) gs[j] += g[0] * std::exp(sv[j] - lse);
    gs[target] -= g[0];
  });
}

Tape::Var Tape::weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
  if (scalars.size() != weights.size()) throw ShapeError("weighted_sum: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) total += weights[i] * scalar(scalars[i]);
  std::vector<Var> ids(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return push({total}, [ids = std::move(ids), w = std::move(w)](Tape& t, std::span<const double> g) {
    for (std::size_t i = 0; i < ids.size(); ++i) t.grad(ids[i])[0] += g[0] * w[i];
  });
}

void Tape::backward(Var root) {
  if (!record_) throw Error("backward() on a tape that does not record gradients");
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[root.id].grad.assign(nodes_[root.id].value.size(), 1.0);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    // The closure may touch other nodes' gradients but never this one's.
    n.backward(*this, n.grad);
  }
}

}  // namespace thrnn
