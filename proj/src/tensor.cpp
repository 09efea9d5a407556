#include "pcam/tensor.hpp"

#include <cmath>

#include "pcam/errors.hpp"

namespace pcam::ad {

int shape_size(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d <= 0) throw ContractError("tensor shape extents must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<int>(data_.size()) != shape_size(shape_))
    throw ContractError("tensor data length does not match shape");
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros_like(const Tensor& t) { return Tensor(t.shape_); }

double& Tensor::at(int r, int c) {
  if (rank() != 2) throw ContractError("at(r,c) requires a rank-2 tensor");
  return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(shape_[1]) + static_cast<std::size_t>(c)];
}

double Tensor::at(int r, int c) const { return const_cast<Tensor*>(this)->at(r, c); }

double Tensor::item() const {
  if (!is_scalar()) throw ContractError("item() requires a scalar tensor");
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

}  // namespace pcam::ad
