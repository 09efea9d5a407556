#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcam/point_cloud.hpp"

namespace pcam {

enum class ShapeFamily {
  Sphere,
  Cube,
  Cylinder,
  Cone,
  Torus,
  Pyramid,
  Plane,
  Dumbbell,  // two-sphere dumbbell
};

const std::vector<ShapeFamily>& all_shape_families();
std::string shape_family_name(ShapeFamily f);
ShapeFamily shape_family_from_name(const std::string& name);

/// Per-instance randomization applied on top of the canonical surface
/// sampling. Scale jitter must stay inside (0.5, 1.5) and surface noise
/// below 0.05.
struct ShapeSpec {
  ShapeFamily family = ShapeFamily::Sphere;
  double scale_jitter_lo = 0.8;
  double scale_jitter_hi = 1.2;
  double max_rotation_angle = 0.785398163397448;  // pi/4; axis uniform on the sphere
  double noise_sigma = 0.01;
};

/// Canonical surface sampling: n points in a fixed surface-parameter order
/// (low-discrepancy lattices), no jitter, no rotation, no normalization.
/// Index i lands at the same surface location for every call, which is what
/// makes pointwise class averaging well defined.
PointCloud sample_surface(ShapeFamily family, int n);

/// Canonical sampling + jittered scale + random rotation + surface noise,
/// then unit-sphere normalization. Deterministic per seed. n must be >= 8.
PointCloud sample_shape(const ShapeSpec& spec, int n, std::uint64_t seed);

struct DatasetConfig {
  std::vector<ShapeFamily> classes = all_shape_families();
  int train_per_class = 100;
  int test_per_class = 20;
  int points_per_cloud = 256;
  ShapeSpec spec_template;  // family is overridden per class
};

/// Deterministic synthetic dataset; train/test instance ids are disjoint and
/// every class appears in both splits.
DatasetSplit dataset_generate(const DatasetConfig& config, std::uint64_t seed);

/// Pointwise mean over the given instances of one class (points are
/// index-aligned as generated), renormalized.
PointCloud class_average_cloud(const std::vector<LabeledCloud>& instances, int label);

/// Convenience: average over the test split.
PointCloud class_average_cloud(const DatasetSplit& split, int label);

/// Pointwise mean over all instances regardless of label, renormalized.
PointCloud global_average_cloud(const std::vector<LabeledCloud>& instances);

/// i.i.d. coordinates, deliberately not normalized (the diffusion study
/// measures raw spread).
PointCloud random_cloud_uniform(double r, int n, std::uint64_t seed);
PointCloud random_cloud_gaussian(double sigma, int n, std::uint64_t seed);

}  // namespace pcam
