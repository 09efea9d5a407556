#include "pcam/shapes.hpp"

#include <cmath>
#include <numbers>

#include "pcam/errors.hpp"
#include "pcam/rng.hpp"

namespace pcam {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;  // frac(golden ratio)
constexpr double kGolden2 = 0.7548776662466927; // plastic-number sequence, 2nd axis

double frac(double x) { return x - std::floor(x); }

/// Low-discrepancy scalar sequence in [0,1).
double seq1(int i) { return frac((i + 0.5) * kGolden); }
double seq2(int i) { return frac((i + 0.5) * kGolden2); }

Point on_unit_sphere(int i, int n, double radius, const Point& center) {
  // Fibonacci lattice.
  const double z = 1.0 - 2.0 * (i + 0.5) / n;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double a = 2.0 * kPi * frac(i * kGolden);
  return {center[0] + radius * r * std::cos(a), center[1] + radius * r * std::sin(a), center[2] + radius * z};
}

PointCloud sample_sphere(int n) {
  PointCloud c(n);
  for (int i = 0; i < n; ++i) c[i] = on_unit_sphere(i, n, 1.0, {0, 0, 0});
  return c;
}

PointCloud sample_cube(int n) {
  // Faces in fixed order; a 2-D lattice inside each face.
  PointCloud c(n);
  for (int i = 0; i < n; ++i) {
    const int face = i % 6;
    const double u = 2.0 * seq1(i / 6) - 1.0;
    const double v = 2.0 * seq2(i / 6) - 1.0;
    switch (face) {
      case 0: c[i] = {+1.0, u, v}; break;
      case 1: c[i] = {-1.0, u, v}; break;
      case 2: c[i] = {u, +1.0, v}; break;
      case 3: c[i] = {u, -1.0, v}; break;
      case 4: c[i] = {u, v, +1.0}; break;
      default: c[i] = {u, v, -1.0}; break;
    }
  }
  return c;
}

PointCloud sample_cylinder(int n) {
  // Radius 0.5, height 2. Lateral area 2*pi, each cap pi/4 -> allocate by area.
  const double lateral_area = 2.0 * kPi * 0.5 * 2.0;
  const double cap_area = kPi * 0.25;
  const double p_lateral = lateral_area / (lateral_area + 2.0 * cap_area);
  PointCloud c(n);
  for (int i = 0; i < n; ++i) {
    const double pick = seq2(i);
    const double u = seq1(i);
    if (pick < p_lateral) {
      const double a = 2.0 * kPi * u;
      const double z = 2.0 * frac(pick / p_lateral * 977.0 + u * kGolden2) - 1.0;
      c[i] = {0.5 * std::cos(a), 0.5 * std::sin(a), z};
    } else {
      const double r = 0.5 * std::sqrt(u);
      const double a = 2.0 * kPi * frac((pick - p_lateral) / (1.0 - p_lateral) * 997.0);
      const double z = (i % 2 == 0) ? 1.0 : -1.0;
      c[i] = {r * std::cos(a), r * std::sin(a), z};
    }
  }
  return c;
}

PointCloud sample_cone(int n) {
  // Apex (0,0,1), base disc of radius 0.8 at z=-1.
  const double base_r = 0.8;
  const double slant = std::sqrt(base_r * base_r + 4.0);
  const double lateral_area = kPi * base_r * slant;
  const double base_area = kPi * base_r * base_r;
  const double p_lateral = lateral_area / (lateral_area + base_area);
  PointCloud c(n);
  for (int i = 0; i < n; ++i) {
    const double u = seq1(i);
    const double pick = seq2(i);
    const double a = 2.0 * kPi * frac(u * 887.0 + pick * kGolden);
    if (pick < p_lateral) {
      const double t = std::sqrt(u);  // area element grows with distance from apex
      const double r = base_r * t;
      c[i] = {r * std::cos(a), r * std::sin(a), 1.0 - 2.0 * t};
    } else {
      const double r = base_r * std::sqrt(u);
      c[i] = {r * std::cos(a), r * std::sin(a), -1.0};
    }
  }
  return c;
}

PointCloud sample_torus(int n) {
  // Ring radius 0.7, tube radius 0.3. Tube angle drawn with density
  // proportional to (R + r cos psi) via Newton inversion of its CDF.
  const double R = 0.7, r = 0.3;
  PointCloud c(n);
  for (int i = 0; i < n; ++i) {
    const double theta = 2.0 * kPi * seq1(i);
    const double target = seq2(i);
    double psi = 2.0 * kPi * target;
    for (int it = 0; it < 8; ++it) {
      const double f = (psi + (r / R) * std::sin(psi)) / (2.0 * kPi) - target;
      const double fp = (1.0 + (r / R) * std::cos(psi)) / (2.0 * kPi);
      psi -= f / fp;
    }
    const double ring = R + r * std::cos(psi);
    c[i] = {ring * std::cos(theta), ring * std::sin(theta), r * std::sin(psi)};
  }
  return c;
}

PointCloud sample_pyramid(int n) {
  // Square base side 1.6 at z=-0.6, apex at (0,0,1).
  const double h = 1.6;
  const Point apex{0.0, 0.0, 1.0};
  const double half = h / 2.0;
  const double zb = -0.6;
  const Point corners[4] = {{+half, +half, zb}, {-half, +half, zb}, {-half, -half, zb}, {+half, -half, zb}};
  const double face_h = std::sqrt((apex[2] - zb) * (apex[2] - zb) + half * half);
  const double face_area = 0.5 * h * face_h;
  const double base_area = h * h;
  const double total = 4.0 * face_area + base_area;
  PointCloud c(n);
  for (int i = 0; i < n; ++i) {
    double u = seq1(i);
    double v = seq2(i);
    const double pick = frac((i + 0.5) * 0.5698402909980532);
    if (pick < base_area / total) {
      c[i] = {h * (u - 0.5), h * (v - 0.5), zb};
    } else {
      const int f = static_cast<int>((pick - base_area / total) / (face_area / total));
      const int fi = std::min(f, 3);
      if (u + v > 1.0) {  // fold into the triangle
        u = 1.0 - u;
        v = 1.0 - v;
      }
      const Point& a = corners[static_cast<std::size_t>(fi)];
      const Point& b = corners[static_cast<std::size_t>((fi + 1) % 4)];
      for (int ax = 0; ax < 3; ++ax) {
        const auto axi = static_cast<std::size_t>(ax);
        c[i][axi] = apex[axi] + u * (a[axi] - apex[axi]) + v * (b[axi] - apex[axi]);
      }
    }
  }
  return c;
}

PointCloud sample_plane(int n) {
  PointCloud c(n);
  for (int i = 0; i < n; ++i) c[i] = {2.0 * seq1(i) - 1.0, 2.0 * seq2(i) - 1.0, 0.0};
  return c;
}

PointCloud sample_dumbbell(int n) {
  PointCloud c(n);
  const int half = n / 2;
  for (int i = 0; i < n; ++i) {
    if (i < half)
      c[i] = on_unit_sphere(i, half, 0.45, {-0.55, 0.0, 0.0});
    else
      c[i] = on_unit_sphere(i - half, n - half, 0.45, {+0.55, 0.0, 0.0});
  }
  return c;
}

void rotate_inplace(PointCloud& c, const Point& axis, double angle) {
  // Rodrigues rotation.
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int i = 0; i < c.size(); ++i) {
    const Point p = c[i];
    const double dot = axis[0] * p[0] + axis[1] * p[1] + axis[2] * p[2];
    const Point cross{axis[1] * p[2] - axis[2] * p[1], axis[2] * p[0] - axis[0] * p[2],
                      axis[0] * p[1] - axis[1] * p[0]};
    for (int a = 0; a < 3; ++a) {
      const auto ai = static_cast<std::size_t>(a);
      c[i][ai] = p[ai] * ca + cross[ai] * sa + axis[ai] * dot * (1.0 - ca);
    }
  }
}

}  // namespace

const std::vector<ShapeFamily>& all_shape_families() {
  static const std::vector<ShapeFamily> families = {
      ShapeFamily::Sphere, ShapeFamily::Cube,    ShapeFamily::Cylinder, ShapeFamily::Cone,
      ShapeFamily::Torus,  ShapeFamily::Pyramid, ShapeFamily::Plane,    ShapeFamily::Dumbbell,
  };
  return families;
}

std::string shape_family_name(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::Sphere: return "sphere";
    case ShapeFamily::Cube: return "cube";
    case ShapeFamily::Cylinder: return "cylinder";
    case ShapeFamily::Cone: return "cone";
    case ShapeFamily::Torus: return "torus";
    case ShapeFamily::Pyramid: return "pyramid";
    case ShapeFamily::Plane: return "plane";
    case ShapeFamily::Dumbbell: return "dumbbell";
  }
  throw ContractError("unknown shape family");
}

ShapeFamily shape_family_from_name(const std::string& name) {
  for (ShapeFamily f : all_shape_families())
    if (shape_family_name(f) == name) return f;
  throw ContractError("unknown shape family: " + name);
}

PointCloud sample_surface(ShapeFamily family, int n) {
  switch (family) {
    case ShapeFamily::Sphere: return sample_sphere(n);
    case ShapeFamily::Cube: return sample_cube(n);
    case ShapeFamily::Cylinder: return sample_cylinder(n);
    case ShapeFamily::Cone: return sample_cone(n);
    case ShapeFamily::Torus: return sample_torus(n);
    case ShapeFamily::Pyramid: return sample_pyramid(n);
    case ShapeFamily::Plane: return sample_plane(n);
    case ShapeFamily::Dumbbell: return sample_dumbbell(n);
  }
  throw ContractError("unknown shape family");
}

PointCloud sample_shape(const ShapeSpec& spec, int n, std::uint64_t seed) {
  if (n < 8) throw ContractError("sample_shape: n must be >= 8");
  if (spec.scale_jitter_lo <= 0.5 || spec.scale_jitter_hi >= 1.5 || spec.scale_jitter_lo > spec.scale_jitter_hi)
    throw ContractError("sample_shape: scale jitter must lie within (0.5, 1.5)");
  if (spec.noise_sigma < 0.0 || spec.noise_sigma >= 0.05)
    throw ContractError("sample_shape: noise sigma must lie in [0, 0.05)");

  PointCloud c = sample_surface(spec.family, n);
  Rng rng(seed);

  const double scale = rng.uniform(spec.scale_jitter_lo, spec.scale_jitter_hi);
  for (int i = 0; i < n; ++i)
    for (auto& v : c[i]) v *= scale;

  // Axis uniform on the sphere, angle uniform in [0, max].
  const double z = rng.uniform(-1.0, 1.0);
  const double a = rng.uniform(0.0, 2.0 * kPi);
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Point axis{rxy * std::cos(a), rxy * std::sin(a), z};
  const double angle = rng.uniform(0.0, spec.max_rotation_angle);
  if (angle > 0.0) rotate_inplace(c, axis, angle);

  if (spec.noise_sigma > 0.0)
    for (int i = 0; i < n; ++i)
      for (auto& v : c[i]) v += rng.normal(0.0, spec.noise_sigma);

  return normalize_unit_sphere(c);
}

DatasetSplit dataset_generate(const DatasetConfig& config, std::uint64_t seed) {
  if (config.classes.empty()) throw ContractError("dataset_generate: need at least one class");
  if (config.train_per_class < 2 || config.test_per_class < 2)
    throw ContractError("dataset_generate: per-class counts must be >= 2");

  DatasetSplit split;
  split.seed = seed;
  Rng root(seed);
  for (std::size_t ci = 0; ci < config.classes.size(); ++ci) {
    split.class_names.push_back(shape_family_name(config.classes[ci]));
    ShapeSpec spec = config.spec_template;
    spec.family = config.classes[ci];
    for (int i = 0; i < config.train_per_class + config.test_per_class; ++i) {
      const std::uint64_t inst_seed = root.fork(ci * 100003ull + static_cast<std::uint64_t>(i)).seed();
      LabeledCloud lc;
      lc.cloud = sample_shape(spec, config.points_per_cloud, inst_seed);
      lc.label = static_cast<int>(ci);
      const bool is_train = i < config.train_per_class;
      lc.instance_id = split.class_names.back() + (is_train ? "-train-" : "-test-") + std::to_string(i);
      (is_train ? split.train : split.test).push_back(std::move(lc));
    }
  }
  return split;
}

PointCloud class_average_cloud(const std::vector<LabeledCloud>& instances, int label) {
  const PointCloud* first = nullptr;
  int count = 0;
  for (const auto& lc : instances)
    if (lc.label == label) {
      if (!first) first = &lc.cloud;
      ++count;
    }
  if (count == 0) throw ContractError("class_average_cloud: no instances with label " + std::to_string(label));
  PointCloud mean(first->size());
  for (const auto& lc : instances) {
    if (lc.label != label) continue;
    if (lc.cloud.size() != mean.size()) throw ContractError("class_average_cloud: point counts differ");
    for (int i = 0; i < mean.size(); ++i)
      for (int a = 0; a < 3; ++a) mean[i][static_cast<std::size_t>(a)] += lc.cloud[i][static_cast<std::size_t>(a)];
  }
  for (int i = 0; i < mean.size(); ++i)
    for (auto& v : mean[i]) v /= count;
  return normalize_unit_sphere(mean);
}

PointCloud class_average_cloud(const DatasetSplit& split, int label) {
  return class_average_cloud(split.test, label);
}

PointCloud global_average_cloud(const std::vector<LabeledCloud>& instances) {
  if (instances.empty()) throw ContractError("global_average_cloud: no instances");
  PointCloud mean(instances.front().cloud.size());
  for (const auto& lc : instances) {
    if (lc.cloud.size() != mean.size()) throw ContractError("global_average_cloud: point counts differ");
    for (int i = 0; i < mean.size(); ++i)
      for (int a = 0; a < 3; ++a) mean[i][static_cast<std::size_t>(a)] += lc.cloud[i][static_cast<std::size_t>(a)];
  }
  for (int i = 0; i < mean.size(); ++i)
    for (auto& v : mean[i]) v /= static_cast<double>(instances.size());
  return normalize_unit_sphere(mean);
}

PointCloud random_cloud_uniform(double r, int n, std::uint64_t seed) {
  if (r < 0.0) throw ContractError("random_cloud_uniform: r must be >= 0");
  Rng rng(seed);
  PointCloud c(n);
  for (int i = 0; i < n; ++i)
    for (auto& v : c[i]) v = rng.uniform(-r, r);
  return c;
}

PointCloud random_cloud_gaussian(double sigma, int n, std::uint64_t seed) {
  if (sigma < 0.0) throw ContractError("random_cloud_gaussian: sigma must be >= 0");
  Rng rng(seed);
  PointCloud c(n);
  for (int i = 0; i < n; ++i)
    for (auto& v : c[i]) v = (sigma == 0.0) ? 0.0 : rng.normal(0.0, sigma);
  return c;
}

}  // namespace pcam
