#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pcam/point_cloud.hpp"
#include "pcam/pointnet.hpp"

namespace pcam::metrics {

/// One-directional Chamfer distance: mean over points of x_g of the
/// Euclidean distance to the nearest point of x_i. Deliberately asymmetric.
double chamfer(const PointCloud& x_g, const PointCloud& x_i);

/// Average of both directional means; the autoencoder reconstruction loss
/// uses this variant.
double chamfer_symmetric(const PointCloud& a, const PointCloud& b);

/// chamfer_symmetric over stacked [s*n,3] tensors, averaged over segments.
double chamfer_symmetric_stacked(const ad::Tensor& a, const ad::Tensor& b, int segments);

/// Mean chamfer(x_g -> ref) over k_refs same-label instances drawn without
/// replacement from train+test.
double chamfer_to_class(const PointCloud& x_g, const DatasetSplit& split, int label, int k_refs = 5,
                        std::uint64_t seed = 0);

/// Exact Earth Mover's Distance between equal-size clouds: the minimum over
/// perfect matchings of the mean matched Euclidean distance, solved with an
/// O(n^3) assignment algorithm. n is capped at 1024.
double emd_exact(const PointCloud& x, const PointCloud& y);

struct FeatureStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;  // symmetric by construction
  int sample_count = 0;
};

/// Mean and sample covariance (divisor N-1) of feature rows plus
/// reg_eps * I; the regularizer keeps the matrix square root well posed for
/// small sample counts.
FeatureStats feature_stats_from(const std::vector<std::vector<double>>& features, double reg_eps = 1e-6);

/// Stats over the classifier's global features of the given clouds.
FeatureStats feature_stats(const ClassifierModel& model, const std::vector<const PointCloud*>& clouds,
                           double reg_eps = 1e-6);

/// ||mu_a - mu_b||^2 + Tr(sigma_a + sigma_b - 2 (sigma_a sigma_b)^{1/2}),
/// with the matrix square root taken in the symmetric form
/// (sigma_a^{1/2} sigma_b sigma_a^{1/2})^{1/2} by eigendecomposition;
/// negative eigenvalues are clamped to zero and the result to >= 0.
double frechet_distance(const FeatureStats& a, const FeatureStats& b);

/// exp of the mean KL divergence over ordered row pairs (the diagonal
/// included by default). Rows are predictions for generated samples of one
/// class; each must sum to 1 within 1e-6. Probabilities are floored at
/// 1e-12 inside the logs.
double modified_is(const std::vector<std::vector<double>>& prob_rows, bool include_diagonal = true);

/// is_m - (ln fid + ln cd) / 2. fid and cd must be positive; callers that
/// need a floor apply it explicitly.
double pc_ams(double is_m, double fid, double cd);

struct SampleSet {
  std::vector<PointCloud> clouds;
  std::vector<std::string> ids;
};

struct MetricRow {
  int label = -1;
  std::string class_name;
  double m_is = 0.0;
  double fid = 0.0;
  double cd = 0.0;
  double emd = 0.0;
  double pc_ams = 0.0;
  bool degenerate_copy = false;  // cd or fid hit the 1e-12 log floor
  std::vector<std::string> generated_ids;
  std::vector<std::string> reference_ids;
};

struct MetricReport {
  std::vector<MetricRow> per_class;
  MetricRow aggregate;  // unweighted class means; pc_ams recomputed from them
  int k_refs = 5;
  std::uint64_t seed = 0;
};

/// Per-class m-IS / FID / CD / EMD / PC-AMS of generated sets against
/// seeded same-class reference draws, plus the aggregate row.
MetricReport evaluate_am_set(const ClassifierModel& model, const std::vector<SampleSet>& generated_per_class,
                             const DatasetSplit& split, int k_refs = 5, std::uint64_t seed = 0);

struct DiffusionRow {
  std::string distribution;  // "uniform" | "gaussian"
  double parameter = 0.0;    // r or sigma
  double fid = 0.0;
  double cd = 0.0;
  double emd = 0.0;
  double fid_ic = 0.0;
  double cd_ic = 0.0;
  double emd_ic = 0.0;
};

struct DiffusionStudy {
  std::vector<DiffusionRow> rows;
  int steps = 10;
  int n_per_step = 10;
  std::uint64_t seed = 0;
};

/// Random-cloud falsification study: uniform spread r in [0,1] and Gaussian
/// sigma in [0,0.1] over `steps` values, scored against randomly drawn real
/// objects; intra-class baselines come from disjoint same-class real pairs.
/// The CD direction is real -> generated, so the degenerate all-origin step
/// measures the mean distance of real points to the origin cluster.
DiffusionStudy diffusion_study(const ClassifierModel& model, const DatasetSplit& split, int steps = 10,
                               int n_per_step = 10, std::uint64_t seed = 0);

}  // namespace pcam::metrics
