#pragma once

#include "pcam/errors.hpp"
#include "pcam/tensor.hpp"

namespace pcam::ad {

/// Central-difference gradient (f(x+h*e_i) - f(x-h*e_i)) / 2h per
/// coordinate. Oracle for the analytic gradients; independent of the tape.
template <typename F>
Tensor finite_difference_gradient(F&& f, const Tensor& x, double h) {
  if (h <= 0.0) throw ContractError("finite_difference_gradient: h must be positive");
  Tensor g(x.shape());
  Tensor probe = x;
  for (int i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace pcam::ad
