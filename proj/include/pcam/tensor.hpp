#pragma once

#include <vector>

namespace pcam::ad {

int shape_size(const std::vector<int>& shape);

/// Dense row-major 64-bit tensor. Rank 0 (empty shape) is a scalar with one
/// element. Values are owned; no views or strides.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros_like(const Tensor& t);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool is_scalar() const { return shape_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  /// Rank-2 element access.
  double& at(int r, int c);
  double at(int r, int c) const;

  /// Value of a scalar tensor.
  double item() const;

  bool all_finite() const;
  void fill(double v);

private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace pcam::ad
