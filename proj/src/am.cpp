#include "pcam/am.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "pcam/adam.hpp"
#include "pcam/errors.hpp"
#include "pcam/rng.hpp"
#include "pcam/shapes.hpp"

namespace pcam {

namespace {

void validate(const AMConfig& cfg, const DatasetSplit& split) {
  if (cfg.lr <= 0.0) throw ContractError("am: lr must be positive");
  if (cfg.iterations < 1) throw ContractError("am: iterations must be >= 1");
  if (cfg.stuck_window < 1 || cfg.stuck_window >= cfg.iterations)
    throw ContractError("am: stuck window must satisfy 1 <= W < iterations");
  if (split.test.empty()) throw ContractError("am: empty test split");
}

double tensor_std(const ad::Tensor& t) {
  double mean = 0.0;
  for (int i = 0; i < t.size(); ++i) mean += t[i];
  mean /= t.size();
  double var = 0.0;
  for (int i = 0; i < t.size(); ++i) var += (t[i] - mean) * (t[i] - mean);
  return std::sqrt(var / t.size());
}

struct AscentState {
  ad::Tensor x;          // optimized variable
  double best_value = 0.0;
  ad::Tensor best_x;
};

}  // namespace

bool am_method_is_latent(AMMethod m) { return m == AMMethod::AE || m == AMMethod::AED || m == AMMethod::NAED; }

std::string am_method_name(AMMethod m) {
  switch (m) {
    case AMMethod::Zero: return "zero";
    case AMMethod::Random: return "random";
    case AMMethod::Average: return "average";
    case AMMethod::Instance: return "instance";
    case AMMethod::AE: return "ae";
    case AMMethod::AED: return "aed";
    case AMMethod::NAED: return "naed";
  }
  throw ContractError("unknown AM method");
}

AMMethod am_method_from_name(const std::string& name) {
  for (AMMethod m : {AMMethod::Zero, AMMethod::Random, AMMethod::Average, AMMethod::Instance, AMMethod::AE,
                     AMMethod::AED, AMMethod::NAED})
    if (am_method_name(m) == name) return m;
  throw ContractError("unknown AM method: " + name);
}

AMResult am_input_space(const ClassifierModel& model, const DatasetSplit& split, const AMConfig& config) {
  validate(config, split);
  if (am_method_is_latent(config.method)) throw ContractError("am_input_space: latent method requested");
  if (config.target_class < 0 || config.target_class >= model.config().class_count)
    throw ContractError("am_input_space: target class out of range");
  const int n = split.point_count();

  AMResult result;
  result.config = config;
  ad::Tensor x({n, 3});
  switch (config.method) {
    case AMMethod::Zero:
      result.init_descriptor = "zero";
      break;
    case AMMethod::Random: {
      Rng rng = Rng(config.seed).fork(10);
      for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
      result.init_descriptor = "uniform(-1,1)";
      break;
    }
    case AMMethod::Average: {
      x = cloud_to_tensor(class_average_cloud(split.test, config.target_class));
      result.init_descriptor = "class_average(" + std::to_string(config.target_class) + ")";
      break;
    }
    case AMMethod::Instance: {
      std::vector<const LabeledCloud*> pool;
      for (const auto& lc : split.test)
        if (lc.label == config.target_class) pool.push_back(&lc);
      if (pool.empty())
        throw ContractError("am_input_space: no test instance with label " + std::to_string(config.target_class));
      Rng rng = Rng(config.seed).fork(11);
      const auto* pickd = pool[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool.size())))];
      x = cloud_to_tensor(pickd->cloud);
      result.init_descriptor = "instance(" + pickd->instance_id + ")";
      break;
    }
    default:
      break;
  }

  ad::Adam adam(ad::AdamConfig{config.lr, 0.9, 0.999, 1e-8}, {&x});
  AscentState st{x, -std::numeric_limits<double>::infinity(), x};

  for (int it = 0; it <= config.iterations; ++it) {
    ad::Tape tape;
    const auto ids = bind_params(tape, model.params());
    const ad::NodeId input = tape.leaf(st.x);
    const auto out = classifier_forward_on_tape(tape, model, ids, input, 1);
    const ad::NodeId act = tape.pick(out.logits, config.target_class);
    const double value = tape.value(act).item();
    result.activation_trace.push_back(value);
    if (value > st.best_value) {
      st.best_value = value;
      st.best_x = st.x;
    }
    if (it == config.iterations) break;
    tape.backward(act);
    std::vector<ad::Tensor*> prm{&st.x};
    std::vector<const ad::Tensor*> grd{&tape.grad(input)};
    if (config.optimizer == AMOptimizer::Adam)
      adam.step(prm, grd, ad::Adam::Direction::Ascend);
    else
      ad::sgd_step(config.lr, prm, grd, ad::Adam::Direction::Ascend);
  }

  result.initial_activation = result.activation_trace.front();
  result.final_activation = st.best_value;
  result.cloud = cloud_from_tensor(st.best_x);
  return result;
}

AMResult am_latent(const ClassifierModel& model, const AutoencoderModel& ae, const DatasetSplit& split,
                   const AMConfig& config) {
  validate(config, split);
  if (!am_method_is_latent(config.method)) throw ContractError("am_latent: input-space method requested");
  if (config.target_class < 0 || config.target_class >= model.config().class_count)
    throw ContractError("am_latent: target class out of range");

  AMResult result;
  result.config = config;

  const PointCloud init_cloud = config.global_average_init
                                    ? global_average_cloud(split.test)
                                    : class_average_cloud(split.test, config.target_class);
  ad::Tensor z = encode(ae, init_cloud);
  result.init_descriptor = std::string("encode(") +
                           (config.global_average_init
                                ? "global_average"
                                : "class_average(" + std::to_string(config.target_class) + ")") +
                           ")";
  if (config.init_jitter_sigma > 0.0) {
    Rng rng = Rng(config.seed).fork(13);
    const double sigma = config.init_jitter_sigma * std::max(tensor_std(z), 1e-12);
    for (int i = 0; i < z.size(); ++i) z[i] += rng.normal(0.0, sigma);
    result.init_descriptor += "+jitter";
  }

  Rng kick_rng = Rng(config.seed).fork(12);
  ad::Adam adam(ad::AdamConfig{config.lr, 0.9, 0.999, 1e-8}, {&z});
  AscentState st{z, -std::numeric_limits<double>::infinity(), z};

  int window_start = 0;
  double best_at_window_start = -std::numeric_limits<double>::infinity();

  for (int it = 0; it <= config.iterations; ++it) {
    ad::Tape tape;
    const auto ae_ids = bind_params(tape, ae.params());
    const ad::NodeId z_node = tape.leaf(ad::Tensor({1, st.x.size()}, st.x.vec()));
    const ad::NodeId recon = decoder_forward_on_tape(tape, ae, ae_ids, z_node, 1);
    const auto cls_ids = bind_params(tape, model.params());
    const auto out = classifier_forward_on_tape(tape, model, cls_ids, recon, 1);
    const ad::NodeId act = tape.pick(out.logits, config.target_class);
    const double value = tape.value(act).item();
    result.activation_trace.push_back(value);
    if (value > st.best_value) {
      st.best_value = value;
      st.best_x = st.x;
    }
    if (it == config.iterations) break;

    if (it - window_start >= config.stuck_window && st.best_value - best_at_window_start < config.stuck_eps) {
      // Stuck: kick the code instead of stepping.
      const double sigma = config.kick_sigma * std::max(tensor_std(st.x), 1e-12);
      for (int i = 0; i < st.x.size(); ++i) st.x[i] += kick_rng.normal(0.0, sigma);
      result.kick_events.push_back(it);
      window_start = it;
      best_at_window_start = st.best_value;
      continue;
    }
    if (it == 0) best_at_window_start = st.best_value;

    tape.backward(act);
    const ad::Tensor& zg = tape.grad(z_node);
    ad::Tensor grad({st.x.size()}, zg.vec());
    std::vector<ad::Tensor*> prm{&st.x};
    std::vector<const ad::Tensor*> grd{&grad};
    if (config.optimizer == AMOptimizer::Adam)
      adam.step(prm, grd, ad::Adam::Direction::Ascend);
    else
      ad::sgd_step(config.lr, prm, grd, ad::Adam::Direction::Ascend);
  }

  result.initial_activation = result.activation_trace.front();
  result.final_activation = st.best_value;
  result.cloud = decode(ae, st.best_x);
  return result;
}

std::vector<AMResult> am_batch(const ClassifierModel& model, const AutoencoderModel* generator,
                               const DatasetSplit& split, const AMConfig& config, int count, int threads) {
  if (count < 1) throw ContractError("am_batch: count must be >= 1");
  const bool latent = am_method_is_latent(config.method);
  if (latent && generator == nullptr) throw ContractError("am_batch: latent method requires a generator");

  std::vector<AMResult> results(static_cast<std::size_t>(count));
  auto run_one = [&](int i) {
    AMConfig cfg = config;
    cfg.seed = config.seed + static_cast<std::uint64_t>(i);
    if (latent) {
      cfg.init_jitter_sigma = (i == 0) ? 0.0 : 0.05;  // run 0 stays the plain call
      results[static_cast<std::size_t>(i)] = am_latent(model, *generator, split, cfg);
    } else {
      results[static_cast<std::size_t>(i)] = am_input_space(model, split, cfg);
    }
  };

  if (threads <= 1) {
    for (int i = 0; i < count; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(threads, count);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) run_one(i);
      });
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace pcam
