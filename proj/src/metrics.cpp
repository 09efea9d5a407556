#include "pcam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcam/errors.hpp"
#include "pcam/rng.hpp"
#include "pcam/shapes.hpp"

namespace pcam::metrics {

namespace {

double point_dist(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double nearest_dist(const Point& p, const PointCloud& cloud) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cloud.size(); ++j) best = std::min(best, point_dist(p, cloud[j]));
  return best;
}

/// O(n^3) shortest-augmenting-path assignment (Jonker-Volgenant flavor)
/// over a dense square cost matrix. Exact optimum.
double solve_assignment(const std::vector<double>& cost, int n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * static_cast<std::size_t>(n) +
                                static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    total += cost[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(j - 1)];
  return total;
}

std::vector<int> draw_distinct(Rng& rng, int pool, int k) {
  std::vector<int> idx(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) idx[static_cast<std::size_t>(i)] = i;
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Eigen::MatrixXd make_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((m + m.transpose()) * 0.5);
  if (es.info() != Eigen::Success) throw NumericError("frechet_distance: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (!std::isfinite(ev[i])) throw NumericError("frechet_distance: non-finite eigenvalue");
    ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double chamfer(const PointCloud& x_g, const PointCloud& x_i) {
  if (x_g.empty() || x_i.empty()) throw ContractError("chamfer: empty cloud");
  double sum = 0.0;
  for (int i = 0; i < x_g.size(); ++i) sum += nearest_dist(x_g[i], x_i);
  return sum / x_g.size();
}

double chamfer_symmetric(const PointCloud& a, const PointCloud& b) {
  return 0.5 * (chamfer(a, b) + chamfer(b, a));
}

double chamfer_symmetric_stacked(const ad::Tensor& a, const ad::Tensor& b, int segments) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != 3 || b.dim(1) != 3)
    throw ContractError("chamfer_symmetric_stacked: tensors must be [n,3]");
  if (segments < 1 || a.dim(0) % segments != 0 || b.dim(0) % segments != 0)
    throw ContractError("chamfer_symmetric_stacked: rows must split into equal segments");
  const int n = a.dim(0) / segments;
  const int m = b.dim(0) / segments;
  double total = 0.0;
  for (int s = 0; s < segments; ++s) {
    PointCloud ca(n), cb(m);
    for (int i = 0; i < n; ++i)
      for (int ax = 0; ax < 3; ++ax) ca[i][static_cast<std::size_t>(ax)] = a[(s * n + i) * 3 + ax];
    for (int j = 0; j < m; ++j)
      for (int ax = 0; ax < 3; ++ax) cb[j][static_cast<std::size_t>(ax)] = b[(s * m + j) * 3 + ax];
    total += chamfer_symmetric(ca, cb);
  }
  return total / segments;
}

double chamfer_to_class(const PointCloud& x_g, const DatasetSplit& split, int label, int k_refs,
                        std::uint64_t seed) {
  if (k_refs < 1) throw ContractError("chamfer_to_class: k_refs must be positive");
  std::vector<const PointCloud*> pool;
  for (const auto& lc : split.train)
    if (lc.label == label) pool.push_back(&lc.cloud);
  for (const auto& lc : split.test)
    if (lc.label == label) pool.push_back(&lc.cloud);
  if (static_cast<int>(pool.size()) < k_refs)
    throw ContractError("chamfer_to_class: class " + std::to_string(label) + " has fewer than k_refs instances");
  Rng rng(seed);
  const auto picks = draw_distinct(rng, static_cast<int>(pool.size()), k_refs);
  double sum = 0.0;
  for (int idx : picks) sum += chamfer(x_g, *pool[static_cast<std::size_t>(idx)]);
  return sum / k_refs;
}

double emd_exact(const PointCloud& x, const PointCloud& y) {
  if (x.empty() || y.empty()) throw ContractError("emd_exact: empty cloud");
  if (x.size() != y.size()) throw ContractError("emd_exact: clouds must have equal size");
  const int n = x.size();
  if (n > 1024) throw ContractError("emd_exact: n capped at 1024");
  std::vector<double> cost(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
          point_dist(x[i], y[j]);
  return solve_assignment(cost, n) / n;
}

FeatureStats feature_stats_from(const std::vector<std::vector<double>>& features, double reg_eps) {
  if (features.size() < 2) throw ContractError("feature_stats: need at least 2 samples");
  const int n = static_cast<int>(features.size());
  const int d = static_cast<int>(features.front().size());
  for (const auto& f : features)
    if (static_cast<int>(f.size()) != d) throw ContractError("feature_stats: ragged feature rows");

  FeatureStats st;
  st.sample_count = n;
  st.mu = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  st.mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - st.mu.transpose();
  st.sigma = (centered.transpose() * centered) / (n - 1);
  st.sigma = ((st.sigma + st.sigma.transpose()) * 0.5).eval();
  st.sigma += reg_eps * Eigen::MatrixXd::Identity(d, d);
  return st;
}

FeatureStats feature_stats(const ClassifierModel& model, const std::vector<const PointCloud*>& clouds,
                           double reg_eps) {
  if (clouds.size() < 2) throw ContractError("feature_stats: need at least 2 clouds");
  std::vector<std::vector<double>> feats;
  feats.reserve(clouds.size());
  for (const auto* c : clouds) feats.push_back(classifier_forward(model, *c).global.vec());
  return feature_stats_from(feats, reg_eps);
}

double frechet_distance(const FeatureStats& a, const FeatureStats& b) {
  if (a.mu.size() != b.mu.size()) throw ContractError("frechet_distance: dimension mismatch");
  const Eigen::MatrixXd sqrt_a = make_sqrt(a.sigma);
  const Eigen::MatrixXd inner = sqrt_a * b.sigma * sqrt_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((inner + inner.transpose()) * 0.5);
  if (es.info() != Eigen::Success) throw NumericError("frechet_distance: eigendecomposition failed");
  double tr_sqrt = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    if (!std::isfinite(ev)) throw NumericError("frechet_distance: non-finite eigenvalue");
    if (ev > 0.0) tr_sqrt += std::sqrt(ev);
  }
  const double mean_term = (a.mu - b.mu).squaredNorm();
  const double value = mean_term + a.sigma.trace() + b.sigma.trace() - 2.0 * tr_sqrt;
  return std::max(value, 0.0);
}

double modified_is(const std::vector<std::vector<double>>& prob_rows, bool include_diagonal) {
  if (prob_rows.empty()) throw ContractError("modified_is: need at least one row");
  const std::size_t k = prob_rows.front().size();
  for (const auto& row : prob_rows) {
    if (row.size() != k) throw ContractError("modified_is: ragged probability rows");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ContractError("modified_is: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ContractError("modified_is: row does not sum to 1");
  }
  const int n = static_cast<int>(prob_rows.size());
  double kl_sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!include_diagonal && i == j) continue;
      double kl = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double pi = std::max(prob_rows[static_cast<std::size_t>(i)][c], 1e-12);
        const double pj = std::max(prob_rows[static_cast<std::size_t>(j)][c], 1e-12);
        kl += prob_rows[static_cast<std::size_t>(i)][c] * (std::log(pi) - std::log(pj));
      }
      kl_sum += kl;
      ++pairs;
    }
  }
  if (pairs == 0) return 1.0;  // single row, diagonal excluded
  return std::exp(kl_sum / pairs);
}

double pc_ams(double is_m, double fid, double cd) {
  if (fid <= 0.0 || cd <= 0.0) throw ContractError("pc_ams: fid and cd must be positive");
  return is_m - 0.5 * (std::log(fid) + std::log(cd));
}

MetricReport evaluate_am_set(const ClassifierModel& model, const std::vector<SampleSet>& generated_per_class,
                             const DatasetSplit& split, int k_refs, std::uint64_t seed) {
  if (generated_per_class.empty()) throw ContractError("evaluate_am_set: no generated sets");
  MetricReport report;
  report.k_refs = k_refs;
  report.seed = seed;
  Rng root(seed);

  double agg_mis = 0.0, agg_fid = 0.0, agg_cd = 0.0, agg_emd = 0.0;
  for (std::size_t label = 0; label < generated_per_class.size(); ++label) {
    const SampleSet& gen = generated_per_class[label];
    if (gen.clouds.empty())
      throw ContractError("evaluate_am_set: no generated samples for class " + std::to_string(label));

    std::vector<const PointCloud*> pool;
    std::vector<std::string> pool_ids;
    for (const auto& lc : split.train)
      if (lc.label == static_cast<int>(label)) {
        pool.push_back(&lc.cloud);
        pool_ids.push_back(lc.instance_id);
      }
    for (const auto& lc : split.test)
      if (lc.label == static_cast<int>(label)) {
        pool.push_back(&lc.cloud);
        pool_ids.push_back(lc.instance_id);
      }
    if (static_cast<int>(pool.size()) < k_refs)
      throw ContractError("evaluate_am_set: class " + std::to_string(label) + " has fewer than k_refs instances");

    Rng rng = root.fork(label);
    const auto picks = draw_distinct(rng, static_cast<int>(pool.size()), k_refs);
    std::vector<const PointCloud*> refs;
    MetricRow row;
    for (int idx : picks) {
      refs.push_back(pool[static_cast<std::size_t>(idx)]);
      row.reference_ids.push_back(pool_ids[static_cast<std::size_t>(idx)]);
    }

    row.label = static_cast<int>(label);
    if (static_cast<int>(label) < static_cast<int>(split.class_names.size()))
      row.class_name = split.class_names[label];
    row.generated_ids = gen.ids;
    if (row.generated_ids.empty())
      for (std::size_t i = 0; i < gen.clouds.size(); ++i)
        row.generated_ids.push_back("gen_c" + std::to_string(label) + "_" + std::to_string(i));

    std::vector<std::vector<double>> prob_rows;
    std::vector<const PointCloud*> gen_ptrs;
    for (const auto& c : gen.clouds) {
      prob_rows.push_back(classifier_forward(model, c).probs.vec());
      gen_ptrs.push_back(&c);
    }
    row.m_is = modified_is(prob_rows);
    row.fid = frechet_distance(feature_stats(model, gen_ptrs), feature_stats(model, refs));

    double cd_sum = 0.0, emd_sum = 0.0;
    for (const auto* g : gen_ptrs)
      for (const auto* r : refs) {
        cd_sum += chamfer(*g, *r);
        emd_sum += emd_exact(*g, *r);
      }
    const double pair_count = static_cast<double>(gen_ptrs.size()) * static_cast<double>(refs.size());
    row.cd = cd_sum / pair_count;
    row.emd = emd_sum / pair_count;

    double fid_for_log = row.fid, cd_for_log = row.cd;
    if (fid_for_log < 1e-12 || cd_for_log < 1e-12) {
      row.degenerate_copy = true;
      fid_for_log = std::max(fid_for_log, 1e-12);
      cd_for_log = std::max(cd_for_log, 1e-12);
    }
    row.pc_ams = pc_ams(row.m_is, fid_for_log, cd_for_log);

    agg_mis += row.m_is;
    agg_fid += row.fid;
    agg_cd += row.cd;
    agg_emd += row.emd;
    report.per_class.push_back(std::move(row));
  }

  const double nc = static_cast<double>(report.per_class.size());
  MetricRow agg;
  agg.label = -1;
  agg.class_name = "aggregate";
  agg.m_is = agg_mis / nc;
  agg.fid = agg_fid / nc;
  agg.cd = agg_cd / nc;
  agg.emd = agg_emd / nc;
  double fid_for_log = agg.fid, cd_for_log = agg.cd;
  if (fid_for_log < 1e-12 || cd_for_log < 1e-12) {
    agg.degenerate_copy = true;
    fid_for_log = std::max(fid_for_log, 1e-12);
    cd_for_log = std::max(cd_for_log, 1e-12);
  }
  agg.pc_ams = pc_ams(agg.m_is, fid_for_log, cd_for_log);
  for (const auto& r : report.per_class) agg.degenerate_copy = agg.degenerate_copy || r.degenerate_copy;
  report.aggregate = std::move(agg);
  return report;
}

DiffusionStudy diffusion_study(const ClassifierModel& model, const DatasetSplit& split, int steps, int n_per_step,
                               std::uint64_t seed) {
  if (steps < 2) throw ContractError("diffusion_study: need at least 2 steps");
  if (n_per_step < 2) throw ContractError("diffusion_study: need at least 2 clouds per step");
  const int n_points = split.point_count();
  if (n_points < 1) throw ContractError("diffusion_study: empty dataset");

  std::vector<const PointCloud*> full_pool;
  for (const auto& lc : split.train) full_pool.push_back(&lc.cloud);
  for (const auto& lc : split.test) full_pool.push_back(&lc.cloud);

  std::vector<std::vector<const PointCloud*>> per_class(static_cast<std::size_t>(split.class_count()));
  for (const auto& lc : split.train) per_class[static_cast<std::size_t>(lc.label)].push_back(&lc.cloud);
  for (const auto& lc : split.test) per_class[static_cast<std::size_t>(lc.label)].push_back(&lc.cloud);

  DiffusionStudy study;
  study.steps = steps;
  study.n_per_step = n_per_step;
  study.seed = seed;
  Rng root(seed);

  // Intra-class baselines: disjoint same-class subsets of real objects.
  double fid_ic = 0.0, cd_ic = 0.0, emd_ic = 0.0;
  {
    int classes_used = 0;
    Rng rng = root.fork(1);
    for (std::size_t c = 0; c < per_class.size(); ++c) {
      const auto& pool = per_class[c];
      if (static_cast<int>(pool.size()) < 2 * n_per_step)
        throw ContractError("diffusion_study: class " + std::to_string(c) +
                            " too small for intra-class baselines");
      const auto picks = draw_distinct(rng, static_cast<int>(pool.size()), 2 * n_per_step);
      std::vector<const PointCloud*> a, b;
      for (int i = 0; i < n_per_step; ++i) a.push_back(pool[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)])]);
      for (int i = n_per_step; i < 2 * n_per_step; ++i)
        b.push_back(pool[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)])]);
      fid_ic += frechet_distance(feature_stats(model, a), feature_stats(model, b));
      double cd_sum = 0.0, emd_sum = 0.0;
      for (const auto* pa : a)
        for (const auto* pb : b) {
          cd_sum += chamfer(*pa, *pb);
          emd_sum += emd_exact(*pa, *pb);
        }
      cd_ic += cd_sum / (n_per_step * n_per_step);
      emd_ic += emd_sum / (n_per_step * n_per_step);
      ++classes_used;
    }
    fid_ic /= classes_used;
    cd_ic /= classes_used;
    emd_ic /= classes_used;
  }

  for (int dist = 0; dist < 2; ++dist) {
    const bool uniform = dist == 0;
    const double max_param = uniform ? 1.0 : 0.1;
    for (int s = 0; s < steps; ++s) {
      const double param = max_param * s / (steps - 1);
      Rng rng = root.fork(100 + static_cast<std::uint64_t>(dist) * 1000 + static_cast<std::uint64_t>(s));

      std::vector<PointCloud> gen;
      for (int i = 0; i < n_per_step; ++i) {
        const std::uint64_t cloud_seed = rng.fork(static_cast<std::uint64_t>(i)).seed();
        gen.push_back(uniform ? random_cloud_uniform(param, n_points, cloud_seed)
                              : random_cloud_gaussian(param, n_points, cloud_seed));
      }
      std::vector<const PointCloud*> refs;
      const auto picks = draw_distinct(rng, static_cast<int>(full_pool.size()), n_per_step);
      for (int idx : picks) refs.push_back(full_pool[static_cast<std::size_t>(idx)]);

      std::vector<const PointCloud*> gen_ptrs;
      for (const auto& c : gen) gen_ptrs.push_back(&c);

      DiffusionRow row;
      row.distribution = uniform ? "uniform" : "gaussian";
      row.parameter = param;
      row.fid = frechet_distance(feature_stats(model, gen_ptrs), feature_stats(model, refs));
      double cd_sum = 0.0, emd_sum = 0.0;
      for (const auto* r : refs)
        for (const auto* g : gen_ptrs) {
          cd_sum += chamfer(*r, *g);  // real -> generated
          emd_sum += emd_exact(*r, *g);
        }
      row.cd = cd_sum / (n_per_step * n_per_step);
      row.emd = emd_sum / (n_per_step * n_per_step);
      row.fid_ic = fid_ic;
      row.cd_ic = cd_ic;
      row.emd_ic = emd_ic;
      study.rows.push_back(std::move(row));
    }
  }
  return study;
}

}  // namespace pcam::metrics
