#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcam/generators.hpp"
#include "pcam/point_cloud.hpp"
#include "pcam/pointnet.hpp"

namespace pcam {

enum class AMMethod { Zero, Random, Average, Instance, AE, AED, NAED };

bool am_method_is_latent(AMMethod m);
std::string am_method_name(AMMethod m);
AMMethod am_method_from_name(const std::string& name);

enum class AMOptimizer { Adam, Sgd };

struct AMConfig {
  int target_class = 0;
  AMMethod method = AMMethod::AE;
  double lr = 5e-6;        // reference default; the toy models want a larger step (the CLI exposes it)
  int iterations = 20000;  // reference default stop
  int stuck_window = 500;  // W
  double stuck_eps = 1e-4;
  double kick_sigma = 0.1;  // x latent std
  std::uint64_t seed = 0;
  AMOptimizer optimizer = AMOptimizer::Adam;
  bool global_average_init = false;  // latent init from the whole test set instead of per class
  /// Latent init jitter (x std(z0)); am_batch turns this on for runs > 0 so
  /// batch outputs differ.
  double init_jitter_sigma = 0.0;
};

struct AMResult {
  PointCloud cloud;
  std::vector<double> activation_trace;  // length iterations + 1
  std::vector<int> kick_events;          // iteration indices
  std::string init_descriptor;
  AMConfig config;
  double initial_activation = 0.0;
  /// Activation of the returned cloud; the optimization returns the
  /// trajectory argmax, so this never falls below the initial value.
  double final_activation = 0.0;
};

/// Gradient ascent on the target logit w.r.t. the n x 3 input coordinates.
/// Initialization per method: zero cloud, U(-1,1) cloud, per-class test
/// average, or a random test instance of the target class. The cloud is not
/// renormalized during ascent.
AMResult am_input_space(const ClassifierModel& model, const DatasetSplit& split, const AMConfig& config);

/// Ascent on the latent code of a trained decoder (decoder and classifier
/// frozen). z0 encodes the class average; if the best activation gain over
/// stuck_window iterations stays below stuck_eps, the code receives a
/// Gaussian kick and the event is logged.
AMResult am_latent(const ClassifierModel& model, const AutoencoderModel& ae, const DatasetSplit& split,
                   const AMConfig& config);

/// count runs with seeds seed+0..count-1. Latent runs after the first get
/// initialization jitter so outputs differ. generator may be null for
/// input-space methods. Runs are independent; threads > 1 fans them out.
std::vector<AMResult> am_batch(const ClassifierModel& model, const AutoencoderModel* generator,
                               const DatasetSplit& split, const AMConfig& config, int count, int threads = 1);

}  // namespace pcam
