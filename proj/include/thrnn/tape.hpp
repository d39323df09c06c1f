#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "thrnn/array2.hpp"

namespace thrnn {

// Gate layout: rows [0,H) reset, [H,2H) update, [2H,3H) candidate.
//   r  = sigmoid(Wr x + Ur h + br)
//   z  = sigmoid(Wz x + Uz h + bz)
//   c  = tanh(Wc x + Uc (r * h) + bc)
//   h' = (1 - z) * h + z * c
struct GruParams {
  Parameter input;      // 3H x I
  Parameter recurrent;  // 3H x H
  Parameter bias;       // 3H x 1

  GruParams() = default;
  GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim);

  std::size_t hidden_dim() const { return recurrent.value.cols(); }
  std::size_t input_dim() const { return input.value.cols(); }
};

// Plain forward evaluation of one GRU step, without recording anything.
std::vector<double> gru_cell_forward(std::span<const double> x, std::span<const double> h, const GruParams& p);
std::vector<double> linear_forward(std::span<const double> x, const Array2& weight, const Array2& bias);

// Records operations and their cached forward values; backward() replays
// them in reverse creation order, which is a reverse topological order.
// Gradients for Parameters are accumulated straight into Parameter::grad.
class Tape {
 public:
  struct Var {
    std::uint32_t id = 0;
  };
  using Backward = std::function<void(Tape&, std::span<const double> upstream)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(std::vector<double> value);
  Var embedding(Parameter& table, std::size_t row);
  Var linear(Parameter& weight, Parameter& bias, Var x);
  Var gru(GruParams& p, Var x, Var h);
  Var concat(std::span<const Var> parts);
  // Inverted dropout; identity when rate == 0.
  Var dropout(Var x, double rate, std::mt19937_64& rng);
  // -log softmax(scores)[target]; a masked entry yields 0 and no gradient.
  Var softmax_xent(Var scores, std::size_t target, bool masked = false);
  Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

  // Escape hatch for fused ops defined elsewhere: `backward` receives the
  // upstream gradient of the new node and must push into inputs via grad().
  Var record(std::vector<double> value, Backward backward);

  std::span<const double> value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  // Valid only during backward().
  std::span<double> grad(Var v) { return nodes_[v.id].grad; }

  void backward(Var root);
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
    Backward backward;
  };
  Var push(std::vector<double> value, Backward backward);

  bool record_;
  std::vector<Node> nodes_;
};

// Throws NumericOverflow naming `what` when any value is NaN/Inf.
void require_finite(std::span<const double> values, const char* what);

}  // namespace thrnn
