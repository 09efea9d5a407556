#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pcam/cloud_io.hpp"
#include "pcam/errors.hpp"
#include "pcam/metrics.hpp"
#include "pcam/rng.hpp"
#include "pcam/shapes.hpp"

using namespace pcam;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pcam_test_" + name)).string();
}

}  // namespace

TEST_CASE("canonical sphere points sit on the unit sphere") {
  const PointCloud c = sample_surface(ShapeFamily::Sphere, 64);
  for (int i = 0; i < c.size(); ++i) {
    const double n = std::sqrt(c[i][0] * c[i][0] + c[i][1] * c[i][1] + c[i][2] * c[i][2]);
    CHECK(std::abs(n - 1.0) < 1e-9);
  }
}

TEST_CASE("sample_shape is deterministic per seed") {
  ShapeSpec spec;
  spec.family = ShapeFamily::Torus;
  const PointCloud a = sample_shape(spec, 64, 1234);
  const PointCloud b = sample_shape(spec, 64, 1234);
  CHECK(a == b);
  const PointCloud c = sample_shape(spec, 64, 1235);
  CHECK_FALSE(a == c);
}

TEST_CASE("cube points with zero noise lie on the face planes") {
  ShapeSpec spec;
  spec.family = ShapeFamily::Cube;
  spec.noise_sigma = 0.0;
  spec.max_rotation_angle = 0.0;
  const PointCloud c = sample_shape(spec, 120, 7);

  // Recover the six axis-aligned face planes from the extremes.
  double lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = 1e300;
    hi[a] = -1e300;
    for (int i = 0; i < c.size(); ++i) {
      lo[a] = std::min(lo[a], c[i][static_cast<std::size_t>(a)]);
      hi[a] = std::max(hi[a], c[i][static_cast<std::size_t>(a)]);
    }
  }
  for (int i = 0; i < c.size(); ++i) {
    double face_dist = 1e300;
    for (int a = 0; a < 3; ++a) {
      face_dist = std::min(face_dist, std::abs(c[i][static_cast<std::size_t>(a)] - lo[a]));
      face_dist = std::min(face_dist, std::abs(c[i][static_cast<std::size_t>(a)] - hi[a]));
    }
    CHECK(face_dist < 1e-9);
  }
}

TEST_CASE("sample_shape validates its spec") {
  ShapeSpec spec;
  CHECK_THROWS_AS(sample_shape(spec, 4, 0), ContractError);  // n too small
  spec.noise_sigma = 0.06;
  CHECK_THROWS_AS(sample_shape(spec, 64, 0), ContractError);
  spec.noise_sigma = 0.01;
  spec.scale_jitter_lo = 0.4;
  CHECK_THROWS_AS(sample_shape(spec, 64, 0), ContractError);
  CHECK_THROWS_AS(shape_family_from_name("octahedron"), ContractError);
}

TEST_CASE("normalize_unit_sphere hand case and idempotence") {
  PointCloud c(2);
  c[0] = {0, 0, 0};
  c[1] = {2, 0, 0};
  const PointCloud n = normalize_unit_sphere(c);
  CHECK(n[0][0] == doctest::Approx(-1.0));
  CHECK(n[1][0] == doctest::Approx(1.0));
  CHECK(n[0][1] == 0.0);

  Rng rng(3);
  PointCloud r(50);
  for (int i = 0; i < 50; ++i)
    for (auto& v : r[i]) v = rng.uniform(-3.0, 3.0);
  const PointCloud n1 = normalize_unit_sphere(r);
  CHECK(std::abs(n1.max_norm() - 1.0) < 1e-12);
  const Point cen = n1.centroid();
  for (double v : cen) CHECK(std::abs(v) < 1e-9);
  const PointCloud n2 = normalize_unit_sphere(n1);
  for (int i = 0; i < 50; ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(n1[i][static_cast<std::size_t>(a)] - n2[i][static_cast<std::size_t>(a)]) < 1e-12);
}

TEST_CASE("normalize_unit_sphere rejects degenerate clouds") {
  PointCloud c(3);
  for (int i = 0; i < 3; ++i) c[i] = {1, 1, 1};
  CHECK_THROWS_AS(normalize_unit_sphere(c), ContractError);
  PointCloud single(1);
  CHECK_THROWS_AS(normalize_unit_sphere(single), ContractError);
}

TEST_CASE("dataset_generate counts, disjointness and determinism") {
  DatasetConfig cfg;
  cfg.classes = {ShapeFamily::Sphere, ShapeFamily::Cube};
  cfg.train_per_class = 2;
  cfg.test_per_class = 2;
  cfg.points_per_cloud = 32;
  const DatasetSplit s = dataset_generate(cfg, 5);
  CHECK(s.train.size() == 4);
  CHECK(s.test.size() == 4);
  std::set<std::string> ids;
  for (const auto& lc : s.train) ids.insert(lc.instance_id);
  for (const auto& lc : s.test) ids.insert(lc.instance_id);
  CHECK(ids.size() == 8);

  const DatasetSplit s2 = dataset_generate(cfg, 5);
  REQUIRE(s2.train.size() == s.train.size());
  for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(s.train[i].cloud == s2.train[i].cloud);

  DatasetConfig bad;
  bad.train_per_class = 1;
  CHECK_THROWS_AS(dataset_generate(bad, 0), ContractError);
}

TEST_CASE("default dataset has an exactly uniform class histogram") {
  const DatasetSplit s = dataset_generate(DatasetConfig{}, 42);
  REQUIRE(s.class_count() == 8);
  std::vector<int> train_hist(8, 0), test_hist(8, 0);
  for (const auto& lc : s.train) ++train_hist[static_cast<std::size_t>(lc.label)];
  for (const auto& lc : s.test) ++test_hist[static_cast<std::size_t>(lc.label)];
  for (int c = 0; c < 8; ++c) {
    CHECK(train_hist[static_cast<std::size_t>(c)] == 100);
    CHECK(test_hist[static_cast<std::size_t>(c)] == 20);
  }
}

TEST_CASE("class_average_cloud single instance and mean oracle") {
  DatasetConfig cfg;
  cfg.classes = {ShapeFamily::Sphere};
  cfg.train_per_class = 2;
  cfg.test_per_class = 2;
  cfg.points_per_cloud = 64;
  const DatasetSplit s = dataset_generate(cfg, 9);

  std::vector<LabeledCloud> one{s.test.front()};
  const PointCloud avg1 = class_average_cloud(one, 0);
  const PointCloud expect = normalize_unit_sphere(one.front().cloud);
  for (int i = 0; i < avg1.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(avg1[i][static_cast<std::size_t>(a)] ==
            doctest::Approx(expect[i][static_cast<std::size_t>(a)]).epsilon(1e-12));

  // Direct recomputation oracle against the library result.
  const PointCloud avg = class_average_cloud(s.test, 0);
  PointCloud manual(64);
  for (const auto& lc : s.test)
    for (int i = 0; i < 64; ++i)
      for (int a = 0; a < 3; ++a)
        manual[i][static_cast<std::size_t>(a)] += lc.cloud[i][static_cast<std::size_t>(a)] / 2.0;
  const PointCloud manual_n = normalize_unit_sphere(manual);
  for (int i = 0; i < 64; ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(avg[i][static_cast<std::size_t>(a)] ==
            doctest::Approx(manual_n[i][static_cast<std::size_t>(a)]).epsilon(1e-9));

  CHECK_THROWS_AS(class_average_cloud(s.test, 3), ContractError);
}

TEST_CASE("random cloud generators: degenerate and moment checks") {
  const PointCloud zu = random_cloud_uniform(0.0, 16, 3);
  const PointCloud zg = random_cloud_gaussian(0.0, 16, 3);
  for (int i = 0; i < 16; ++i)
    for (int a = 0; a < 3; ++a) {
      CHECK(zu[i][static_cast<std::size_t>(a)] == 0.0);
      CHECK(zg[i][static_cast<std::size_t>(a)] == 0.0);
    }

  const int n = 10000;
  const PointCloud u = random_cloud_uniform(1.0, n, 77);
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) mean += u[i][static_cast<std::size_t>(a)];
    mean /= n;
    for (int i = 0; i < n; ++i) {
      const double d = u[i][static_cast<std::size_t>(a)] - mean;
      var += d * d;
    }
    var /= n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0 / 3.0) < 0.02);
  }
  CHECK_THROWS_AS(random_cloud_uniform(-1.0, 8, 0), ContractError);
}

TEST_CASE("binary cloud round trip is bit-identical") {
  ShapeSpec spec;
  spec.family = ShapeFamily::Cone;
  const PointCloud c = sample_shape(spec, 64, 21);
  const std::string path = temp_path("roundtrip.pcam");
  save_cloud_binary(path, c);
  const PointCloud back = load_cloud_binary(path);
  CHECK(c == back);
  std::filesystem::remove(path);
}

TEST_CASE("ply round trip and hand-written fixture") {
  ShapeSpec spec;
  spec.family = ShapeFamily::Pyramid;
  const PointCloud c = sample_shape(spec, 32, 22);
  const std::string path = temp_path("roundtrip.ply");
  save_cloud_ply(path, c);
  const PointCloud back = load_cloud_ply(path);
  REQUIRE(back.size() == c.size());
  for (int i = 0; i < c.size(); ++i)
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(back[i][static_cast<std::size_t>(a)] - c[i][static_cast<std::size_t>(a)]) < 1e-6);
  std::filesystem::remove(path);

  const std::string fixture = temp_path("fixture.ply");
  {
    std::ofstream out(fixture);
    out << "ply\nformat ascii 1.0\ncomment hand-authored fixture\nelement vertex 3\n"
           "property double x\nproperty double y\nproperty double z\nend_header\n"
           "0.5 -1.25 3\n0 0 0\n-2.5 0.125 1e-3\n";
  }
  const PointCloud f = load_cloud_ply(fixture);
  REQUIRE(f.size() == 3);
  CHECK(f[0][0] == 0.5);
  CHECK(f[0][1] == -1.25);
  CHECK(f[0][2] == 3.0);
  CHECK(f[2][0] == -2.5);
  CHECK(f[2][2] == 0.001);
  std::filesystem::remove(fixture);
}

TEST_CASE("cloud io failure modes") {
  const PointCloud c = sample_shape(ShapeSpec{}, 16, 1);
  CHECK_THROWS_AS(save_cloud_ply("", c), IoError);
  CHECK_THROWS_AS(load_cloud_binary("/nonexistent/nope.pcam"), IoError);

  const std::string bad = temp_path("bad.ply");
  {
    std::ofstream out(bad);
    out << "plx\nnot a header\n";
  }
  CHECK_THROWS_WITH_AS(load_cloud_ply(bad), doctest::Contains("byte offset"), IoError);
  std::filesystem::remove(bad);

  const std::string trunc = temp_path("trunc.pcam");
  save_cloud_binary(trunc, c);
  std::filesystem::resize_file(trunc, 20);  // cut inside the payload
  CHECK_THROWS_WITH_AS(load_cloud_binary(trunc), doctest::Contains("byte offset"), IoError);
  std::filesystem::remove(trunc);
}

TEST_CASE("nearest-centroid baseline separates the default dataset") {
  const DatasetSplit s = dataset_generate(DatasetConfig{}, 42);
  std::vector<PointCloud> centroids;
  for (int c = 0; c < s.class_count(); ++c) centroids.push_back(class_average_cloud(s.train, c));
  int hits = 0;
  for (const auto& lc : s.test) {
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < s.class_count(); ++c) {
      const double d = metrics::chamfer_symmetric(lc.cloud, centroids[static_cast<std::size_t>(c)]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == lc.label) ++hits;
  }
  const double acc = static_cast<double>(hits) / static_cast<double>(s.test.size());
  MESSAGE("nearest-centroid accuracy: ", acc);
  CHECK(acc > 0.6);
}
