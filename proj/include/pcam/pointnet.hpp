#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcam/point_cloud.hpp"
#include "pcam/tape.hpp"

namespace pcam {

struct ClassifierConfig {
  std::vector<int> mlp = {64, 128, 256};  // shared per-point widths; last one is the global feature dim
  std::vector<int> head = {128};          // hidden widths before the class logits
  int class_count = 8;

  int global_dim() const { return mlp.back(); }
};

/// Per-point shared MLP -> max-pool -> fully connected head. No input or
/// feature transform nets; the max-pool makes logits exactly permutation
/// invariant.
class ClassifierModel {
public:
  ClassifierModel() = default;
  ClassifierModel(ClassifierConfig cfg, std::uint64_t seed);

  const ClassifierConfig& config() const { return cfg_; }
  std::vector<ad::Tensor>& params() { return params_; }
  const std::vector<ad::Tensor>& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }

private:
  ClassifierConfig cfg_;
  std::vector<ad::Tensor> params_;
  std::vector<std::string> names_;
};

/// All feature taps from one forward pass. pointwise holds the per-point
/// features after the last shared layer (pre-pool); global is their
/// column-wise max; probs is the stable softmax of logits.
struct FeatureBundle {
  ad::Tensor pointwise;  // [n, f]
  ad::Tensor global;     // [f]
  ad::Tensor logits;     // [k]
  ad::Tensor probs;      // [k]
};

FeatureBundle classifier_forward(const ClassifierModel& model, const PointCloud& cloud);

int classifier_predict(const ClassifierModel& model, const PointCloud& cloud);

/// Tape-level forward over `segments` clouds stacked row-wise; used by
/// training, the generators and AM.
struct ClassifierTapeOut {
  ad::NodeId pointwise;  // [segments*n, f]
  ad::NodeId global;     // [segments, f]
  ad::NodeId logits;     // [segments, k]
};

std::vector<ad::NodeId> bind_params(ad::Tape& tape, const std::vector<ad::Tensor>& params);

ClassifierTapeOut classifier_forward_on_tape(ad::Tape& tape, const ClassifierModel& model,
                                             const std::vector<ad::NodeId>& param_ids, ad::NodeId input,
                                             int segments);

/// Pre-softmax logit of the target class plus its gradient w.r.t. the input
/// points. The logit (not the probability) is the AM objective: softmax
/// saturates and starves the ascent of gradient.
struct TargetActivation {
  double value = 0.0;
  ad::Tensor cloud_grad;  // [n, 3]
};

TargetActivation target_activation(const ClassifierModel& model, const PointCloud& cloud, int class_index);

struct TrainClassifierConfig {
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  /// Stop once test accuracy reaches this (1.1 never triggers).
  double stop_at_test_accuracy = 1.1;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct ClassifierTrainResult {
  std::vector<EpochStats> history;
  double best_test_accuracy = 0.0;
  int best_epoch = -1;
};

/// Deterministic minibatch Adam training. The model is left at the epoch
/// with the best test accuracy.
ClassifierTrainResult train_classifier(ClassifierModel& model, const DatasetSplit& split,
                                       const TrainClassifierConfig& config);

double classifier_accuracy(const ClassifierModel& model, const std::vector<LabeledCloud>& instances);

/// Stable softmax of a logit vector.
ad::Tensor softmax_vector(const ad::Tensor& logits);

}  // namespace pcam
