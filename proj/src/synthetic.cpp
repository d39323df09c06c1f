#include "thrnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "thrnn/error.hpp"

namespace thrnn::synth {

using nlohmann::json;

namespace {

constexpr double kSecondsPerDay = 86400.0;

void check_stochastic(const std::vector<std::vector<double>>& m, std::size_t cols, const char* what) {
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() != cols) throw InvalidArgument(std::string(what) + ": row has the wrong length");
    double sum = 0.0;
    for (double v : m[r]) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + ": negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      std::ostringstream os;
      os << what << ": row " << r << " sums to " << sum;
      throw InvalidArgument(os.str());
    }
  }
}

void check_mixture(std::span<const GapComponent> mix) {
  if (mix.empty()) throw InvalidArgument("gap mixture is empty");
  double sum = 0.0;
  for (const auto& c : mix) {
    if (!(c.weight >= 0.0)) throw InvalidArgument("gap mixture weight must be >= 0");
    sum += c.weight;
    switch (c.dist.kind) {
      case GapDistribution::Kind::Exponential:
      case GapDistribution::Kind::Constant:
        if (!(c.dist.a > 0.0)) throw InvalidArgument("gap distribution needs a positive scale");
        break;
      case GapDistribution::Kind::LogNormal:
        if (!(c.dist.b > 0.0)) throw InvalidArgument("lognormal sigma must be > 0");
        break;
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("gap mixture weights must sum to 1");
}

double sample_mixture(std::span<const GapComponent> mix, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (const auto& c : mix) {
    if (x < c.weight) return c.dist.sample(rng);
    x -= c.weight;
  }
  return mix.back().dist.sample(rng);
}

std::size_t sample_row(std::span<const double> row, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (x < row[j]) return j;
    x -= row[j];
  }
  // Rounding left a sliver of mass; return the last positive entry.
  for (std::size_t j = row.size(); j-- > 0;)
    if (row[j] > 0.0) return j;
  return row.size() - 1;
}

}  // namespace

double GapDistribution::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::Exponential:
      return std::exponential_distribution<double>(1.0 / a)(rng);
    case Kind::LogNormal:
      return std::lognormal_distribution<double>(a, b)(rng);
    case Kind::Constant:
      return a;
  }
  return a;
}

double GapDistribution::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  switch (kind) {
    case Kind::Exponential:
      return -std::expm1(-x / a);
    case Kind::LogNormal:
      return 0.5 * std::erfc(-(std::log(x) - a) / (b * std::sqrt(2.0)));
    case Kind::Constant:
      return x >= a ? 1.0 : 0.0;
  }
  return 0.0;
}

double GapDistribution::mean() const {
  switch (kind) {
    case Kind::Exponential:
      return a;
    case Kind::LogNormal:
      return std::exp(a + 0.5 * b * b);
    case Kind::Constant:
      return a;
  }
  return a;
}

double mixture_cdf(std::span<const GapComponent> mixture, double x) {
  double acc = 0.0;
  for (const auto& c : mixture) acc += c.weight * c.dist.cdf(x);
  return acc;
}

double mixture_mean(std::span<const GapComponent> mixture) {
  double acc = 0.0;
  for (const auto& c : mixture) acc += c.weight * c.dist.mean();
  return acc;
}

void SynthSpec::validate() const {
  if (num_users == 0 || sessions_per_user == 0) throw InvalidArgument("synthetic spec needs users and sessions");
  if (min_session_length == 0 || max_session_length < min_session_length)
    throw InvalidArgument("synthetic session length range is invalid");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must lie in (0, 1)");
  if (item_transition.size() < 2) throw InvalidArgument("synthetic vocabulary needs at least two items");
  if (item_spacing < 0) throw InvalidArgument("item_spacing must be >= 0");
  check_stochastic(item_transition, item_transition.size(), "item_transition");
  effective_transition(item_transition);
  check_mixture(gap_mixture);
  if (coupling) {
    const std::size_t k = coupling->state_transition.size();
    if (k == 0) throw InvalidArgument("coupling needs at least one latent state");
    check_stochastic(coupling->state_transition, k, "state_transition");
    if (coupling->gap_by_state.size() != k || coupling->start_items_by_state.size() != k)
      throw InvalidArgument("coupling: per-state lists must match the number of states");
    for (const auto& mix : coupling->gap_by_state) check_mixture(mix);
    for (const auto& [lo, hi] : coupling->start_items_by_state)
      if (lo >= hi || hi > num_items()) throw InvalidArgument("coupling: start item range is invalid");
  }
}

std::vector<std::vector<double>> effective_transition(const std::vector<std::vector<double>>& m) {
  auto out = m;
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r][r] = 0.0;
    const double sum = std::accumulate(out[r].begin(), out[r].end(), 0.0);
    if (!(sum > 0.0)) throw InvalidArgument("item_transition row " + std::to_string(r) + " has only a self-loop");
    for (double& v : out[r]) v /= sum;
  }
  return out;
}

double bayes_recall_at_k(const std::vector<std::vector<double>>& effective, std::span<const double> source_weights,
                         std::size_t k) {
  if (source_weights.size() != effective.size()) throw ShapeError("bayes_recall_at_k: weight count mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < effective.size(); ++i) {
    if (source_weights[i] == 0.0) continue;
    std::vector<double> row = effective[i];
    const std::size_t kk = std::min(k, row.size());
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kk), row.end(), std::greater<>());
    num += source_weights[i] * std::accumulate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kk), 0.0);
    den += source_weights[i];
  }
  if (den == 0.0) throw InvalidArgument("bayes_recall_at_k: all source weights are zero");
  return num / den;
}

std::vector<std::vector<double>> banded_transition(std::size_t n, std::span<const double> successor_probs) {
  if (n < successor_probs.size() + 2) throw InvalidArgument("banded_transition: vocabulary too small");
  const double strong = std::accumulate(successor_probs.begin(), successor_probs.end(), 0.0);
  if (strong > 1.0 + 1e-12) throw InvalidArgument("banded_transition: successor probabilities exceed 1");
  const std::size_t rest = n - 1 - successor_probs.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) m[i][j] = (1.0 - strong) / static_cast<double>(rest);
    for (std::size_t s = 0; s < successor_probs.size(); ++s) m[i][(i + 1 + s) % n] = successor_probs[s];
  }
  return m;
}

DatasetSplit generate_corpus(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto chain = effective_transition(spec.item_transition);
  const std::size_t n_items = spec.num_items();

  std::vector<UserHistory> histories;
  std::vector<std::string> item_ids(n_items);
  std::vector<std::string> user_ids(spec.num_users);
  for (std::size_t i = 0; i < n_items; ++i) item_ids[i] = "i" + std::to_string(i);

  for (std::size_t u = 0; u < spec.num_users; ++u) {
    user_ids[u] = "u" + std::to_string(u);
    std::seed_seq seq{seed, static_cast<std::uint64_t>(u), std::uint64_t{0x73796e}};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> len_dist(spec.min_session_length, spec.max_session_length);

    std::size_t state = 0;
    if (spec.coupling) {
      std::uniform_int_distribution<std::size_t> s0(0, spec.coupling->state_transition.size() - 1);
      state = s0(rng);
    }
    Seconds t = 1'500'000'000;
    UserHistory h{static_cast<UserIndex>(u), {}};
    for (std::size_t s = 0; s < spec.sessions_per_user; ++s) {
      Session sess;
      const std::size_t len = len_dist(rng);
      ItemIndex item = 0;
      if (spec.coupling) {
        const auto [lo, hi] = spec.coupling->start_items_by_state[state];
        item = std::uniform_int_distribution<ItemIndex>(lo, hi - 1)(rng);
      } else {
        item = std::uniform_int_distribution<ItemIndex>(0, static_cast<ItemIndex>(n_items - 1))(rng);
      }
      sess.items.push_back(item);
      while (sess.items.size() < len) {
        item = static_cast<ItemIndex>(sample_row(chain[item], rng));
        sess.items.push_back(item);
      }
      sess.start_time = t;
      sess.end_time = t + static_cast<Seconds>(len - 1) * spec.item_spacing;
      h.sessions.push_back(std::move(sess));

      const double gap_days = spec.coupling ? sample_mixture(spec.coupling->gap_by_state[state], rng)
                                            : sample_mixture(spec.gap_mixture, rng);
      const auto gap = std::max<Seconds>(1, static_cast<Seconds>(std::llround(gap_days * kSecondsPerDay)));
      t = h.sessions.back().end_time + gap;
      if (spec.coupling) state = sample_row(spec.coupling->state_transition[state], rng);
    }
    assign_gaps(h.sessions);
    histories.push_back(std::move(h));
  }

  DatasetSplit split = split_train_test(std::move(histories), item_ids, user_ids, spec.train_fraction, 1);
  // Restore the generator's own item numbering so transition matrices stay
  // addressable by index.
  for (auto* part : {&split.train, &split.test}) {
    for (auto& h : *part)
      for (auto& s : h.sessions)
        for (auto& i : s.items) i = static_cast<ItemIndex>(std::stoul(split.item_ids[i].substr(1)));
  }
  split.item_ids = item_ids;
  return split;
}

double sample_gap_from_model_density(double s, double w, std::mt19937_64& rng) {
  if (s > kMaxExponent) throw NumericOverflow("time head bias term too large to sample from");
  if (w <= -kSmallTimeWeight && density_total_mass_at(s, w) < 1.0 - 1e-3) {
    std::ostringstream os;
    os << "improper density: mass " << density_total_mass_at(s, w) << " (v.h + b = " << s << ", w = " << w << ")";
    throw InvalidArgument(os.str());
  }
  std::exponential_distribution<double> unit(1.0);
  const double rate = std::exp(s);
  while (true) {
    const double e = unit(rng);
    if (std::abs(w) < kSmallTimeWeight) return e / rate;
    const double x = w * e / rate;
    // With w < 0 a draw can land in the defective tail (no next event);
    // those are redrawn, i.e. sampling is conditional on a finite gap.
    if (x <= -1.0) continue;
    return std::log1p(x) / w;
  }
}

double sample_gap_from_model_density(std::span<const double> h, const TimeHeadParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_gap_from_model_density(p.bias_term(h), p.w, rng);
}

std::vector<double> simulate_hawkes(const hawkes::HawkesParams& p, std::size_t num_events, std::mt19937_64& rng) {
  p.validate();
  std::vector<double> events;
  events.reserve(num_events);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double t = 0.0;
  double state = 0.0;  // sum of exp(-decay (t - t_j)) at the current time
  while (events.size() < num_events) {
    // Intensity only decays between events, so its current value bounds it.
    const double bound = p.gamma0 + p.excitation * state;
    const double dt = std::exponential_distribution<double>(bound)(rng);
    t += dt;
    state *= std::exp(-p.decay * dt);
    const double lam = p.gamma0 + p.excitation * state;
    if (u(rng) * bound <= lam) {
      events.push_back(t);
      state += 1.0;
    }
  }
  return events;
}

double simulate_hawkes_next_gap(const hawkes::HawkesParams& p, double excitation_state, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double t = 0.0;
  double state = excitation_state;
  while (true) {
    const double bound = p.gamma0 + p.excitation * state;
    const double dt = std::exponential_distribution<double>(bound)(rng);
    t += dt;
    state *= std::exp(-p.decay * dt);
    if (u(rng) * bound <= p.gamma0 + p.excitation * state) return t;
  }
}

// --- JSON -------------------------------------------------------------------

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + " must be a JSON object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw InvalidArgument(std::string("unknown key '") + key + "' in " + where);
  }
}

GapComponent component_from_json(const json& j) {
  reject_unknown(j, {"weight", "dist", "mean_days", "mu", "sigma", "days"}, "gap component");
  GapComponent c;
  c.weight = j.value("weight", 1.0);
  const std::string kind = j.at("dist").get<std::string>();
  if (kind == "exponential") {
    c.dist = {GapDistribution::Kind::Exponential, j.at("mean_days").get<double>(), 0.0};
  } else if (kind == "lognormal") {
    c.dist = {GapDistribution::Kind::LogNormal, j.at("mu").get<double>(), j.at("sigma").get<double>()};
  } else if (kind == "constant") {
    c.dist = {GapDistribution::Kind::Constant, j.at("days").get<double>(), 0.0};
  } else {
    throw InvalidArgument("unknown gap distribution '" + kind + "'");
  }
  return c;
}

json component_to_json(const GapComponent& c) {
  switch (c.dist.kind) {
    case GapDistribution::Kind::Exponential:
      return {{"weight", c.weight}, {"dist", "exponential"}, {"mean_days", c.dist.a}};
    case GapDistribution::Kind::LogNormal:
      return {{"weight", c.weight}, {"dist", "lognormal"}, {"mu", c.dist.a}, {"sigma", c.dist.b}};
    case GapDistribution::Kind::Constant:
      return {{"weight", c.weight}, {"dist", "constant"}, {"days", c.dist.a}};
  }
  return {};
}

std::vector<GapComponent> mixture_from_json(const json& j) {
  std::vector<GapComponent> out;
  for (const auto& c : j) out.push_back(component_from_json(c));
  return out;
}

}  // namespace

SynthSpec spec_from_json(const json& j) {
  reject_unknown(j,
                 {"num_users", "sessions_per_user", "min_session_length", "max_session_length", "train_fraction",
                  "item_spacing_seconds", "items", "gap_mixture", "coupling"},
                 "synthetic spec");
  SynthSpec s;
  s.num_users = j.value("num_users", s.num_users);
  s.sessions_per_user = j.value("sessions_per_user", s.sessions_per_user);
  s.min_session_length = j.value("min_session_length", s.min_session_length);
  s.max_session_length = j.value("max_session_length", s.max_session_length);
  s.train_fraction = j.value("train_fraction", s.train_fraction);
  s.item_spacing = j.value("item_spacing_seconds", s.item_spacing);

  const json& items = j.at("items");
  reject_unknown(items, {"type", "num_items", "successor_probs", "rows"}, "items");
  const std::string type = items.at("type").get<std::string>();
  if (type == "banded") {
    const auto probs = items.at("successor_probs").get<std::vector<double>>();
    s.item_transition = banded_transition(items.at("num_items").get<std::size_t>(), probs);
  } else if (type == "matrix") {
    s.item_transition = items.at("rows").get<std::vector<std::vector<double>>>();
  } else {
    throw InvalidArgument("unknown items type '" + type + "'");
  }
  s.gap_mixture = mixture_from_json(j.at("gap_mixture"));

  if (j.contains("coupling")) {
    const json& c = j.at("coupling");
    reject_unknown(c, {"state_transition", "states"}, "coupling");
    ContextCoupling cp;
    cp.state_transition = c.at("state_transition").get<std::vector<std::vector<double>>>();
    for (const auto& st : c.at("states")) {
      reject_unknown(st, {"items", "gap_mixture"}, "coupling state");
      const auto range = st.at("items").get<std::vector<ItemIndex>>();
      if (range.size() != 2) throw InvalidArgument("coupling state items must be [first, last)");
      cp.start_items_by_state.emplace_back(range[0], range[1]);
      cp.gap_by_state.push_back(mixture_from_json(st.at("gap_mixture")));
    }
    s.coupling = std::move(cp);
  }
  s.validate();
  return s;
}

json spec_to_json(const SynthSpec& spec) {
  json mix = json::array();
  for (const auto& c : spec.gap_mixture) mix.push_back(component_to_json(c));
  json j = {{"num_users", spec.num_users},
            {"sessions_per_user", spec.sessions_per_user},
            {"min_session_length", spec.min_session_length},
            {"max_session_length", spec.max_session_length},
            {"train_fraction", spec.train_fraction},
            {"item_spacing_seconds", spec.item_spacing},
            {"items", {{"type", "matrix"}, {"rows", spec.item_transition}}},
            {"gap_mixture", mix}};
  if (spec.coupling) {
    json states = json::array();
    for (std::size_t k = 0; k < spec.coupling->gap_by_state.size(); ++k) {
      json m = json::array();
      for (const auto& c : spec.coupling->gap_by_state[k]) m.push_back(component_to_json(c));
      const auto [lo, hi] = spec.coupling->start_items_by_state[k];
      states.push_back({{"items", {lo, hi}}, {"gap_mixture", m}});
    }
    j["coupling"] = {{"state_transition", spec.coupling->state_transition}, {"states", states}};
  }
  return j;
}

}  // namespace thrnn::synth
