#pragma once

#include <vector>

#include "pcam/tensor.hpp"

namespace pcam::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. The caller picks the update direction, so the same
/// state drives loss descent and activation ascent. Moment accumulators
/// share shapes with their parameters; the step counter increases by one
/// per step.
class Adam {
public:
  enum class Direction { Descend, Ascend };

  Adam(AdamConfig cfg, const std::vector<const Tensor*>& params);

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
            Direction dir = Direction::Descend);

  int step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  int t_ = 0;
};

/// Plain gradient step (no moments), same interface.
void sgd_step(double lr, const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              Adam::Direction dir);

}  // namespace pcam::ad
