#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcam/point_cloud.hpp"
#include "pcam/pointnet.hpp"
#include "pcam/tape.hpp"

namespace pcam {

struct AutoencoderConfig {
  std::vector<int> encoder = {64, 128};  // per-point widths; the last is the latent dim
  std::vector<int> decoder = {256, 512};  // hidden widths; the output layer emits n*3
  int n_points = 256;

  int latent_dim() const { return encoder.back(); }
};

/// Per-point shared MLP + max-pool encoder, fully connected decoder
/// reshaped to n x 3. Decoded clouds are not renormalized; the decoder has
/// to learn scale.
class AutoencoderModel {
public:
  AutoencoderModel() = default;
  AutoencoderModel(AutoencoderConfig cfg, std::uint64_t seed);

  const AutoencoderConfig& config() const { return cfg_; }
  std::vector<ad::Tensor>& params() { return params_; }
  const std::vector<ad::Tensor>& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }
  int encoder_param_count() const { return encoder_param_count_; }

private:
  AutoencoderConfig cfg_;
  std::vector<ad::Tensor> params_;
  std::vector<std::string> names_;
  int encoder_param_count_ = 0;
};

ad::Tensor encode(const AutoencoderModel& ae, const PointCloud& cloud);
PointCloud decode(const AutoencoderModel& ae, const ad::Tensor& latent);

/// Encoder over `segments` stacked clouds -> [segments, latent].
ad::NodeId encoder_forward_on_tape(ad::Tape& tape, const AutoencoderModel& ae,
                                   const std::vector<ad::NodeId>& param_ids, ad::NodeId input, int segments);
/// Decoder over a [segments, latent] code -> [segments*n, 3].
ad::NodeId decoder_forward_on_tape(ad::Tape& tape, const AutoencoderModel& ae,
                                   const std::vector<ad::NodeId>& param_ids, ad::NodeId z, int segments);

struct DiscriminatorConfig {
  std::vector<int> mlp = {64, 128};
  std::vector<int> head = {64};
};

/// Per-point shared MLP + max-pool + fully connected head ending in a
/// sigmoid unit.
class DiscriminatorModel {
public:
  DiscriminatorModel() = default;
  DiscriminatorModel(DiscriminatorConfig cfg, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return cfg_; }
  std::vector<ad::Tensor>& params() { return params_; }
  const std::vector<ad::Tensor>& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }

private:
  DiscriminatorConfig cfg_;
  std::vector<ad::Tensor> params_;
  std::vector<std::string> names_;
};

/// Scores over `segments` stacked clouds -> [segments, 1], all in (0,1).
ad::NodeId discriminator_forward_on_tape(ad::Tape& tape, const DiscriminatorModel& d,
                                         const std::vector<ad::NodeId>& param_ids, ad::NodeId input, int segments);

double discriminator_score(const DiscriminatorModel& d, const PointCloud& cloud);

struct DiscriminatorLossValue {
  double l_d = 0.0;   // critic gap mean(d(fake)) - mean(d(real)), in (-1,1)
  double l_df = 0.0;  // mean(-log(1 - d(fake))); the generator pushes this up
};

DiscriminatorLossValue discriminator_loss(const DiscriminatorModel& d, const std::vector<const PointCloud*>& real,
                                          const std::vector<const PointCloud*>& fake);

enum class GenKind { AE, AED, NAED };

enum class TrainedSide { Generator, Discriminator };

struct GenBatchRecord {
  int epoch = 0;
  int batch = 0;
  double l_c = 0.0;
  std::optional<double> l_f1;
  std::optional<double> l_f2;
  std::optional<double> l_d;
  std::optional<double> l_df;
  TrainedSide side = TrainedSide::Generator;
  bool d_noise_injected = false;
  bool ae_noise_applied = false;
};

struct TrainLog {
  std::vector<GenBatchRecord> batches;
};

struct GenTrainConfig {
  double w_f1 = 1.0;  // pointwise-feature loss weight (the only feature term in AED)
  double w_f2 = 1.0;  // global-feature loss weight (NAED)
  double w_d = 0.5;
  double d_alt_threshold = 0.0;
  double d_noise_threshold = -0.75;
  double d_noise_sigma = 0.01;         // x per-layer parameter std
  double ae_param_noise_sigma = 0.01;  // x per-layer parameter std (NAED)
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;

  /// Test hook, called after every batch step.
  std::function<void(const GenBatchRecord&, const AutoencoderModel&, const DiscriminatorModel*)> on_batch;
};

/// Plain Chamfer autoencoder training (generator side only).
TrainLog train_ae(AutoencoderModel& ae, const DatasetSplit& split, const GenTrainConfig& config);

/// Adversarial variants. Per batch, the critic gap decides which side
/// trains: generator when l_d < d_alt_threshold, discriminator otherwise;
/// a gap below d_noise_threshold additionally perturbs the discriminator
/// parameters with Gaussian noise. With w_d == 0 the adversarial path is
/// disabled entirely and the run collapses to train_ae. The classifier is
/// frozen and supplies the feature distances.
TrainLog train_aed(AutoencoderModel& ae, DiscriminatorModel& d, const ClassifierModel& classifier,
                   const DatasetSplit& split, const GenTrainConfig& config);

/// AED plus Gaussian parameter noise on the encoder for every generator
/// forward pass (gradients are taken at the noisy point, the update applies
/// to the clean parameters) and the global-feature loss term.
TrainLog train_naed(AutoencoderModel& ae, DiscriminatorModel& d, const ClassifierModel& classifier,
                    const DatasetSplit& split, const GenTrainConfig& config);

/// Mean symmetric Chamfer distance between instances and their
/// reconstructions.
double reconstruction_cd(const AutoencoderModel& ae, const std::vector<LabeledCloud>& instances);

}  // namespace pcam
