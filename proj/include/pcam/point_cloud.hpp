#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcam/tensor.hpp"

namespace pcam {

using Point = std::array<double, 3>;

/// Ordered list of 3-D points in normalized model coordinates.
class PointCloud {
public:
  PointCloud() = default;
  explicit PointCloud(int n) : pts_(static_cast<std::size_t>(n), Point{0.0, 0.0, 0.0}) {}
  explicit PointCloud(std::vector<Point> pts) : pts_(std::move(pts)) {}

  int size() const { return static_cast<int>(pts_.size()); }
  bool empty() const { return pts_.empty(); }
  Point& operator[](int i) { return pts_[static_cast<std::size_t>(i)]; }
  const Point& operator[](int i) const { return pts_[static_cast<std::size_t>(i)]; }
  std::vector<Point>& points() { return pts_; }
  const std::vector<Point>& points() const { return pts_; }

  Point centroid() const;
  double max_norm() const;
  bool all_finite() const;

  bool operator==(const PointCloud& o) const { return pts_ == o.pts_; }

private:
  std::vector<Point> pts_;
};

/// Centroid to the origin, then scale so the farthest point has norm 1.
/// Requires at least two distinct points.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

ad::Tensor cloud_to_tensor(const PointCloud& cloud);
PointCloud cloud_from_tensor(const ad::Tensor& t);

/// Rows of several clouds stacked into one [sum(n), 3] tensor.
ad::Tensor stack_clouds(const std::vector<const PointCloud*>& clouds);

struct LabeledCloud {
  PointCloud cloud;
  int label = 0;
  std::string instance_id;
};

struct DatasetSplit {
  std::vector<LabeledCloud> train;
  std::vector<LabeledCloud> test;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;

  int class_count() const { return static_cast<int>(class_names.size()); }
  int point_count() const { return train.empty() ? 0 : train.front().cloud.size(); }
};

}  // namespace pcam
