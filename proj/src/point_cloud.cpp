#include "pcam/point_cloud.hpp"

#include <cmath>

#include "pcam/errors.hpp"

namespace pcam {

Point PointCloud::centroid() const {
  Point c{0.0, 0.0, 0.0};
  for (const auto& p : pts_)
    for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(a)] += p[static_cast<std::size_t>(a)];
  const double n = static_cast<double>(pts_.size());
  for (auto& v : c) v /= n;
  return c;
}

double PointCloud::max_norm() const {
  double best = 0.0;
  for (const auto& p : pts_) {
    const double n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if (n2 > best) best = n2;
  }
  return std::sqrt(best);
}

bool PointCloud::all_finite() const {
  for (const auto& p : pts_)
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  if (cloud.size() < 2) throw ContractError("normalize_unit_sphere: need at least 2 points");
  const Point c = cloud.centroid();
  PointCloud out(cloud.size());
  double max2 = 0.0;
  for (int i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a)
      out[i][static_cast<std::size_t>(a)] = cloud[i][static_cast<std::size_t>(a)] - c[static_cast<std::size_t>(a)];
    const auto& p = out[i];
    max2 = std::max(max2, p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  const double r = std::sqrt(max2);
  if (r <= 0.0) throw ContractError("normalize_unit_sphere: all points identical");
  for (int i = 0; i < out.size(); ++i)
    for (auto& v : out[i]) v /= r;
  return out;
}

ad::Tensor cloud_to_tensor(const PointCloud& cloud) {
  ad::Tensor t({cloud.size(), 3});
  for (int i = 0; i < cloud.size(); ++i)
    for (int a = 0; a < 3; ++a) t[i * 3 + a] = cloud[i][static_cast<std::size_t>(a)];
  return t;
}

PointCloud cloud_from_tensor(const ad::Tensor& t) {
  if (t.rank() != 2 || t.dim(1) != 3) throw ContractError("cloud_from_tensor: tensor must be [n,3]");
  PointCloud c(t.dim(0));
  for (int i = 0; i < c.size(); ++i)
    for (int a = 0; a < 3; ++a) c[i][static_cast<std::size_t>(a)] = t[i * 3 + a];
  return c;
}

ad::Tensor stack_clouds(const std::vector<const PointCloud*>& clouds) {
  int rows = 0;
  for (const auto* c : clouds) rows += c->size();
  ad::Tensor t({rows, 3});
  int r = 0;
  for (const auto* c : clouds)
    for (int i = 0; i < c->size(); ++i, ++r)
      for (int a = 0; a < 3; ++a) t[r * 3 + a] = (*c)[i][static_cast<std::size_t>(a)];
  return t;
}

}  // namespace pcam
