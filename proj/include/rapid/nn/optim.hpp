#pragma once

#include <cstdint>
#include <vector>

#include "rapid/nn/graph.hpp"

namespace rapid::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One optimizer owns its parameter list and per-parameter moment slots.
// A NaN/Inf gradient aborts the step naming the offending parameter; the
// parameters are left untouched in that case.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Param*> params, AdamConfig cfg);

  void step();
  void zero_grad();
  int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    Tensor m, v;
  };
  std::vector<Param*> params_;
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  int64_t step_count_ = 0;
};

// target <- (1 - rate) * target + rate * online, elementwise.
// Rejects rate outside (0, 1].
void polyak_update(Param& target, const Param& online, double rate);
void polyak_update(std::vector<Param*> target, std::vector<Param*> online, double rate);

}  // namespace rapid::nn
