#pragma once

#include <algorithm>
#include <cmath>

#include "pcam/rng.hpp"
#include "pcam/tensor.hpp"

namespace pcam::testutil {

/// Relative error between an analytic gradient and its finite-difference
/// estimate, normalized by the larger of 1 and the estimate's magnitude.
inline double rel_err(const ad::Tensor& analytic, const ad::Tensor& fd) {
  double worst = 0.0;
  double scale = 1.0;
  for (int i = 0; i < fd.size(); ++i) scale = std::max(scale, std::abs(fd[i]));
  for (int i = 0; i < analytic.size(); ++i) worst = std::max(worst, std::abs(analytic[i] - fd[i]));
  return worst / scale;
}

inline ad::Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(std::move(shape));
  for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Random tensor whose entries stay at least `margin` away from zero, so
/// ReLU-style kinks cannot sit inside a finite-difference neighborhood.
inline ad::Tensor random_tensor_away_from_zero(Rng& rng, std::vector<int> shape, double margin = 0.05) {
  ad::Tensor t = random_tensor(rng, std::move(shape));
  for (int i = 0; i < t.size(); ++i)
    if (std::abs(t[i]) < margin) t[i] = t[i] < 0.0 ? t[i] - margin : t[i] + margin;
  return t;
}

}  // namespace pcam::testutil
