#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "thrnn/array2.hpp"

namespace thrnn {

struct ParamGroup {
  std::string name;
  std::vector<Parameter*> params;
  double learning_rate = 1e-3;
  double clip_norm = 0.0;  // 0 disables clipping of the group's gradient norm
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Array2 first;
  Array2 second;
};

// Adam with per-group learning rates and a step counter shared by all groups.
class Adam {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}

  // Applies one update. Arrays whose gradient holds a non-finite value are
  // left untouched; their names are returned.
  std::vector<std::string> step(std::span<ParamGroup> groups);

  std::int64_t steps() const { return steps_; }
  const AdamHyper& hyper() const { return hyper_; }
  const std::map<std::string, AdamMoments>& moments() const { return moments_; }

  void restore(std::int64_t steps, std::map<std::string, AdamMoments> moments) {
    steps_ = steps;
    moments_ = std::move(moments);
  }

 private:
  AdamHyper hyper_;
  std::int64_t steps_ = 0;
  std::map<std::string, AdamMoments> moments_;
};

}  // namespace thrnn
