#include "pcam/pointnet.hpp"

#include <algorithm>
#include <cmath>

#include "pcam/adam.hpp"
#include "pcam/errors.hpp"
#include "pcam/rng.hpp"

namespace pcam {

namespace {

/// He-normal weights, zero biases, appended as (W, b) per layer.
void init_affine_chain(const std::vector<int>& dims, Rng& rng, const std::string& prefix,
                       std::vector<ad::Tensor>& params, std::vector<std::string>& names) {
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    ad::Tensor w({in, out});
    const double sigma = std::sqrt(2.0 / in);
    for (int i = 0; i < w.size(); ++i) w[i] = rng.normal(0.0, sigma);
    params.push_back(std::move(w));
    names.push_back(prefix + ".w" + std::to_string(l));
    params.push_back(ad::Tensor({out}));
    names.push_back(prefix + ".b" + std::to_string(l));
  }
}

std::vector<int> chain_dims(int input, const std::vector<int>& widths, int output = -1) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), widths.begin(), widths.end());
  if (output > 0) dims.push_back(output);
  return dims;
}

}  // namespace

ClassifierModel::ClassifierModel(ClassifierConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.mlp.empty() || cfg_.class_count < 1) throw ContractError("classifier config: empty layer plan");
  Rng rng(seed);
  init_affine_chain(chain_dims(3, cfg_.mlp), rng, "mlp", params_, names_);
  init_affine_chain(chain_dims(cfg_.global_dim(), cfg_.head, cfg_.class_count), rng, "head", params_, names_);
}

std::vector<ad::NodeId> bind_params(ad::Tape& tape, const std::vector<ad::Tensor>& params) {
  std::vector<ad::NodeId> ids;
  ids.reserve(params.size());
  for (const auto& p : params) ids.push_back(tape.leaf(p));
  return ids;
}

ClassifierTapeOut classifier_forward_on_tape(ad::Tape& tape, const ClassifierModel& model,
                                             const std::vector<ad::NodeId>& param_ids, ad::NodeId input,
                                             int segments) {
  const auto& cfg = model.config();
  std::size_t p = 0;
  ad::NodeId h = input;
  const std::size_t mlp_layers = cfg.mlp.size();
  for (std::size_t l = 0; l < mlp_layers; ++l) {
    h = tape.affine(h, param_ids[p], param_ids[p + 1]);
    p += 2;
    h = tape.relu(h);
  }
  const ad::NodeId pointwise = h;
  const ad::NodeId global = tape.max_pool_segments(pointwise, segments).values;
  ad::NodeId g = global;
  const std::size_t head_layers = cfg.head.size() + 1;
  for (std::size_t l = 0; l < head_layers; ++l) {
    g = tape.affine(g, param_ids[p], param_ids[p + 1]);
    p += 2;
    if (l + 1 < head_layers) g = tape.relu(g);
  }
  return ClassifierTapeOut{pointwise, global, g};
}

ad::Tensor softmax_vector(const ad::Tensor& logits) {
  ad::Tensor probs = logits;
  double m = probs[0];
  for (int i = 1; i < probs.size(); ++i) m = std::max(m, probs[i]);
  double sum = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(probs[i] - m);
    sum += probs[i];
  }
  for (int i = 0; i < probs.size(); ++i) probs[i] /= sum;
  return probs;
}

FeatureBundle classifier_forward(const ClassifierModel& model, const PointCloud& cloud) {
  if (cloud.empty()) throw ContractError("classifier_forward: empty cloud");
  ad::Tape tape;
  const auto ids = bind_params(tape, model.params());
  const ad::NodeId input = tape.leaf(cloud_to_tensor(cloud));
  const auto out = classifier_forward_on_tape(tape, model, ids, input, 1);

  FeatureBundle fb;
  fb.pointwise = tape.value(out.pointwise);
  const ad::Tensor& g = tape.value(out.global);
  fb.global = ad::Tensor({g.dim(1)}, g.vec());
  const ad::Tensor& lg = tape.value(out.logits);
  fb.logits = ad::Tensor({lg.dim(1)}, lg.vec());
  fb.probs = softmax_vector(fb.logits);
  return fb;
}

int classifier_predict(const ClassifierModel& model, const PointCloud& cloud) {
  const auto fb = classifier_forward(model, cloud);
  int best = 0;
  for (int i = 1; i < fb.logits.size(); ++i)
    if (fb.logits[i] > fb.logits[best]) best = i;
  return best;
}

TargetActivation target_activation(const ClassifierModel& model, const PointCloud& cloud, int class_index) {
  if (class_index < 0 || class_index >= model.config().class_count)
    throw ContractError("target_activation: class index out of range");
  ad::Tape tape;
  const auto ids = bind_params(tape, model.params());
  const ad::NodeId input = tape.leaf(cloud_to_tensor(cloud));
  const auto out = classifier_forward_on_tape(tape, model, ids, input, 1);
  const ad::NodeId target = tape.pick(out.logits, class_index);
  tape.backward(target);
  return TargetActivation{tape.value(target).item(), tape.grad(input)};
}

double classifier_accuracy(const ClassifierModel& model, const std::vector<LabeledCloud>& instances) {
  if (instances.empty()) throw ContractError("classifier_accuracy: empty instance list");
  int hit = 0;
  for (const auto& lc : instances)
    if (classifier_predict(model, lc.cloud) == lc.label) ++hit;
  return static_cast<double>(hit) / static_cast<double>(instances.size());
}

ClassifierTrainResult train_classifier(ClassifierModel& model, const DatasetSplit& split,
                                       const TrainClassifierConfig& config) {
  if (split.train.empty() || split.test.empty()) throw ContractError("train_classifier: empty split");
  const int n_train = static_cast<int>(split.train.size());
  const int batch = std::max(1, std::min(config.batch, n_train));

  ad::Adam adam(ad::AdamConfig{config.lr, 0.9, 0.999, 1e-8},
                [&] {
                  std::vector<const ad::Tensor*> ps;
                  for (const auto& p : model.params()) ps.push_back(&p);
                  return ps;
                }());

  Rng shuffle_rng = Rng(config.seed).fork(1);
  ClassifierTrainResult result;
  std::vector<ad::Tensor> best_params = model.params();

  std::vector<int> order(static_cast<std::size_t>(n_train));
  for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int loss_batches = 0;
    int train_hits = 0;

    for (int start = 0; start < n_train; start += batch) {
      const int count = std::min(batch, n_train - start);
      std::vector<const PointCloud*> clouds;
      std::vector<int> labels;
      clouds.reserve(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        const auto& lc = split.train[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
        clouds.push_back(&lc.cloud);
        labels.push_back(lc.label);
      }

      ad::Tape tape;
      const auto ids = bind_params(tape, model.params());
      const ad::NodeId input = tape.leaf(stack_clouds(clouds));
      const auto out = classifier_forward_on_tape(tape, model, ids, input, count);
      const ad::NodeId loss = tape.softmax_cross_entropy(out.logits, labels);

      const ad::Tensor& logits = tape.value(out.logits);
      const int k = logits.dim(1);
      for (int i = 0; i < count; ++i) {
        int arg = 0;
        for (int j = 1; j < k; ++j)
          if (logits.at(i, j) > logits.at(i, arg)) arg = j;
        if (arg == labels[static_cast<std::size_t>(i)]) ++train_hits;
      }

      const double loss_v = tape.value(loss).item();
      if (!std::isfinite(loss_v))
        throw NumericError("train_classifier: loss diverged at epoch " + std::to_string(epoch));
      loss_sum += loss_v;
      ++loss_batches;

      tape.backward(loss);
      std::vector<ad::Tensor*> prm;
      std::vector<const ad::Tensor*> grd;
      for (std::size_t i = 0; i < model.params().size(); ++i) {
        prm.push_back(&model.params()[i]);
        grd.push_back(&tape.grad(ids[i]));
      }
      adam.step(prm, grd, ad::Adam::Direction::Descend);
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / loss_batches;
    es.train_accuracy = static_cast<double>(train_hits) / n_train;
    es.test_accuracy = classifier_accuracy(model, split.test);
    result.history.push_back(es);

    if (es.test_accuracy > result.best_test_accuracy) {
      result.best_test_accuracy = es.test_accuracy;
      result.best_epoch = epoch;
      best_params = model.params();
    }
    if (es.test_accuracy >= config.stop_at_test_accuracy) break;
  }

  model.params() = best_params;
  return result;
}

}  // namespace pcam
