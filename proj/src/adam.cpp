#include "pcam/adam.hpp"

#include <cmath>

#include "pcam/errors.hpp"

namespace pcam::ad {

Adam::Adam(AdamConfig cfg, const std::vector<const Tensor*>& params) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.push_back(Tensor::zeros_like(*p));
    v_.push_back(Tensor::zeros_like(*p));
  }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, Direction dir) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ContractError("adam_step: parameter/gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  const double sign = (dir == Direction::Descend) ? -1.0 : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(m_[i]) || !g.same_shape(m_[i])) throw ContractError("adam_step: shape mismatch");
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int e = 0; e < p.size(); ++e) {
      m[e] = cfg_.beta1 * m[e] + (1.0 - cfg_.beta1) * g[e];
      v[e] = cfg_.beta2 * v[e] + (1.0 - cfg_.beta2) * g[e] * g[e];
      const double mhat = m[e] / bc1;
      const double vhat = v[e] / bc2;
      p[e] += sign * cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void sgd_step(double lr, const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              Adam::Direction dir) {
  if (params.size() != grads.size()) throw ContractError("sgd_step: parameter/gradient count mismatch");
  const double sign = (dir == Adam::Direction::Descend) ? -1.0 : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g)) throw ContractError("sgd_step: shape mismatch");
    for (int e = 0; e < p.size(); ++e) p[e] += sign * lr * g[e];
  }
}

}  // namespace pcam::ad
