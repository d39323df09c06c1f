#include "thrnn/optimizer.hpp"

#include <cmath>

#include "thrnn/error.hpp"

namespace thrnn {

namespace {

bool all_finite(const Array2& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

std::vector<std::string> Adam::step(std::span<ParamGroup> groups) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(hyper_.beta1, t);
  const double c2 = 1.0 - std::pow(hyper_.beta2, t);
  std::vector<std::string> skipped;

  for (auto& group : groups) {
    if (!(group.learning_rate > 0.0)) throw InvalidArgument("group '" + group.name + "' needs a positive learning rate");
    double scale = 1.0;
    if (group.clip_norm > 0.0) {
      double sq = 0.0;
      for (const Parameter* p : group.params) {
        if (!all_finite(p->grad)) continue;
        for (double g : p->grad.data()) sq += g * g;
      }
      const double norm = std::sqrt(sq);
      if (norm > group.clip_norm) scale = group.clip_norm / norm;
    }
    for (Parameter* p : group.params) {
      if (!all_finite(p->grad)) {
        skipped.push_back(p->name);
        continue;
      }
      auto [it, inserted] = moments_.try_emplace(p->name);
      AdamMoments& m = it->second;
      if (inserted) {
        m.first = Array2(p->value.rows(), p->value.cols());
        m.second = Array2(p->value.rows(), p->value.cols());
      }
      if (m.first.size() != p->value.size()) throw ShapeError("optimizer state shape mismatch for " + p->name);
      auto val = p->value.data();
      const auto grad = p->grad.data();
      auto m1 = m.first.data();
      auto m2 = m.second.data();
      for (std::size_t i = 0; i < val.size(); ++i) {
        const double g = grad[i] * scale;
        m1[i] = hyper_.beta1 * m1[i] + (1.0 - hyper_.beta1) * g;
        m2[i] = hyper_.beta2 * m2[i] + (1.0 - hyper_.beta2) * g * g;
        const double mhat = m1[i] / c1;
        const double vhat = m2[i] / c2;
        val[i] -= group.learning_rate * mhat / (std::sqrt(vhat) + hyper_.epsilon);
      }
    }
  }
  return skipped;
}

}  // namespace thrnn
