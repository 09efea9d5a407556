#include "pcam/generators.hpp"

#include <cmath>

#include "pcam/adam.hpp"
#include "pcam/errors.hpp"
#include "pcam/metrics.hpp"
#include "pcam/rng.hpp"

namespace pcam {

namespace {

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

double tensor_std(const ad::Tensor& t) {
  double mean = 0.0;
  for (int i = 0; i < t.size(); ++i) mean += t[i];
  mean /= t.size();
  double var = 0.0;
  for (int i = 0; i < t.size(); ++i) var += (t[i] - mean) * (t[i] - mean);
  return std::sqrt(var / t.size());
}

}  // namespace

AutoencoderModel::AutoencoderModel(AutoencoderConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.encoder.empty() || cfg_.decoder.empty() || cfg_.n_points < 1)
    throw ContractError("autoencoder config: empty layer plan");
  Rng rng(seed);
  init_affine_chain(chain_dims(3, cfg_.encoder), rng, "enc", params_, names_);
  encoder_param_count_ = static_cast<int>(params_.size());
  init_affine_chain(chain_dims(cfg_.latent_dim(), cfg_.decoder, cfg_.n_points * 3), rng, "dec", params_, names_);
}

ad::NodeId encoder_forward_on_tape(ad::Tape& tape, const AutoencoderModel& ae,
                                   const std::vector<ad::NodeId>& param_ids, ad::NodeId input, int segments) {
  std::size_t p = 0;
  ad::NodeId h = input;
  const std::size_t layers = ae.config().encoder.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.affine(h, param_ids[p], param_ids[p + 1]);
    p += 2;
    if (l + 1 < layers) h = tape.relu(h);  // latent itself stays unrectified
  }
  return tape.max_pool_segments(h, segments).values;
}

ad::NodeId decoder_forward_on_tape(ad::Tape& tape, const AutoencoderModel& ae,
                                   const std::vector<ad::NodeId>& param_ids, ad::NodeId z, int segments) {
  std::size_t p = static_cast<std::size_t>(ae.encoder_param_count());
  ad::NodeId h = z;
  const std::size_t layers = ae.config().decoder.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.affine(h, param_ids[p], param_ids[p + 1]);
    p += 2;
    if (l + 1 < layers) h = tape.relu(h);
  }
  return tape.reshape(h, {segments * ae.config().n_points, 3});
}

ad::Tensor encode(const AutoencoderModel& ae, const PointCloud& cloud) {
  if (cloud.empty()) throw ContractError("encode: empty cloud");
  ad::Tape tape;
  const auto ids = bind_params(tape, ae.params());
  const ad::NodeId z = encoder_forward_on_tape(tape, ae, ids, tape.leaf(cloud_to_tensor(cloud)), 1);
  const ad::Tensor& zv = tape.value(z);
  return ad::Tensor({zv.dim(1)}, zv.vec());
}

PointCloud decode(const AutoencoderModel& ae, const ad::Tensor& latent) {
  if (latent.size() != ae.config().latent_dim()) throw ContractError("decode: latent dimension mismatch");
  ad::Tape tape;
  const auto ids = bind_params(tape, ae.params());
  const ad::NodeId z = tape.leaf(ad::Tensor({1, latent.size()}, latent.vec()));
  const ad::NodeId recon = decoder_forward_on_tape(tape, ae, ids, z, 1);
  return cloud_from_tensor(tape.value(recon));
}

DiscriminatorModel::DiscriminatorModel(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.mlp.empty()) throw ContractError("discriminator config: empty layer plan");
  Rng rng(seed);
  init_affine_chain(chain_dims(3, cfg_.mlp), rng, "mlp", params_, names_);
  init_affine_chain(chain_dims(cfg_.mlp.back(), cfg_.head, 1), rng, "head", params_, names_);
}

ad::NodeId discriminator_forward_on_tape(ad::Tape& tape, const DiscriminatorModel& d,
                                         const std::vector<ad::NodeId>& param_ids, ad::NodeId input, int segments) {
  std::size_t p = 0;
  ad::NodeId h = input;
  for (std::size_t l = 0; l < d.config().mlp.size(); ++l) {
    h = tape.affine(h, param_ids[p], param_ids[p + 1]);
    p += 2;
    h = tape.relu(h);
  }
  h = tape.max_pool_segments(h, segments).values;
  const std::size_t head_layers = d.config().head.size() + 1;
  for (std::size_t l = 0; l < head_layers; ++l) {
    h = tape.affine(h, param_ids[p], param_ids[p + 1]);
    p += 2;
    if (l + 1 < head_layers) h = tape.relu(h);
  }
  return tape.sigmoid(h);
}

double discriminator_score(const DiscriminatorModel& d, const PointCloud& cloud) {
  if (cloud.empty()) throw ContractError("discriminator_score: empty cloud");
  ad::Tape tape;
  const auto ids = bind_params(tape, d.params());
  const ad::NodeId s = discriminator_forward_on_tape(tape, d, ids, tape.leaf(cloud_to_tensor(cloud)), 1);
  return tape.value(s)[0];
}

DiscriminatorLossValue discriminator_loss(const DiscriminatorModel& d, const std::vector<const PointCloud*>& real,
                                          const std::vector<const PointCloud*>& fake) {
  if (real.empty() || fake.empty()) throw ContractError("discriminator_loss: empty batch");
  double mean_real = 0.0, mean_fake = 0.0, l_df = 0.0;
  for (const auto* c : real) mean_real += discriminator_score(d, *c);
  mean_real /= static_cast<double>(real.size());
  for (const auto* c : fake) {
    const double s = discriminator_score(d, *c);
    mean_fake += s;
    l_df += -std::log(std::max(1.0 - s, 1e-12));
  }
  mean_fake /= static_cast<double>(fake.size());
  l_df /= static_cast<double>(fake.size());
  return DiscriminatorLossValue{mean_fake - mean_real, l_df};
}

namespace {

/// Reconstruction of a stacked batch with the current (clean) parameters.
ad::Tensor reconstruct_values(const AutoencoderModel& ae, const ad::Tensor& input_stack, int segments) {
  ad::Tape tape;
  const auto ids = bind_params(tape, ae.params());
  const ad::NodeId z = encoder_forward_on_tape(tape, ae, ids, tape.leaf(input_stack), segments);
  const ad::NodeId recon = decoder_forward_on_tape(tape, ae, ids, z, segments);
  return tape.value(recon);
}

struct BatchScores {
  double mean_fake = 0.0;
  double mean_real = 0.0;
  double l_df = 0.0;
};

BatchScores discriminator_batch_scores(const DiscriminatorModel& d, const ad::Tensor& real_stack,
                                       const ad::Tensor& fake_stack, int segments) {
  ad::Tape tape;
  const auto ids = bind_params(tape, d.params());
  const ad::NodeId sf = discriminator_forward_on_tape(tape, d, ids, tape.leaf(fake_stack), segments);
  const ad::NodeId sr = discriminator_forward_on_tape(tape, d, ids, tape.leaf(real_stack), segments);
  BatchScores out;
  const ad::Tensor& fv = tape.value(sf);
  const ad::Tensor& rv = tape.value(sr);
  for (int i = 0; i < fv.size(); ++i) {
    out.mean_fake += fv[i];
    out.l_df += -std::log(std::max(1.0 - fv[i], 1e-12));
  }
  out.mean_fake /= fv.size();
  out.l_df /= fv.size();
  for (int i = 0; i < rv.size(); ++i) out.mean_real += rv[i];
  out.mean_real /= rv.size();
  return out;
}

struct BatchFeatures {
  ad::Tensor pointwise;  // [B*n, f]
  ad::Tensor global;     // [B, f]
};

BatchFeatures classifier_features(const ClassifierModel& cls, const ad::Tensor& input_stack, int segments) {
  ad::Tape tape;
  const auto ids = bind_params(tape, cls.params());
  const auto out = classifier_forward_on_tape(tape, cls, ids, tape.leaf(input_stack), segments);
  return BatchFeatures{tape.value(out.pointwise), tape.value(out.global)};
}

TrainLog train_generator_family(GenKind kind, AutoencoderModel& ae, DiscriminatorModel* d,
                                const ClassifierModel* classifier, const DatasetSplit& split,
                                const GenTrainConfig& cfg) {
  if (split.train.empty()) throw ContractError("generator training: empty split");
  if (cfg.w_f1 < 0 || cfg.w_f2 < 0 || cfg.w_d < 0) throw ContractError("generator training: weights must be >= 0");
  if (cfg.d_noise_threshold >= cfg.d_alt_threshold)
    throw ContractError("generator training: d_noise_threshold must lie below d_alt_threshold");
  const bool adversarial = kind != GenKind::AE && cfg.w_d > 0.0;
  if (adversarial && d == nullptr) throw ContractError("generator training: discriminator required");
  const bool need_features = kind != GenKind::AE && classifier != nullptr &&
                             (cfg.w_f1 > 0.0 || (kind == GenKind::NAED && cfg.w_f2 > 0.0));
  if (kind != GenKind::AE && classifier == nullptr && (cfg.w_f1 > 0.0 || cfg.w_f2 > 0.0))
    throw ContractError("generator training: frozen classifier required for feature losses");

  const int n_train = static_cast<int>(split.train.size());
  const int batch = std::max(1, std::min(cfg.batch, n_train));

  auto collect_ptrs = [](const std::vector<ad::Tensor>& v) {
    std::vector<const ad::Tensor*> out;
    for (const auto& t : v) out.push_back(&t);
    return out;
  };
  ad::Adam adam_g(ad::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, collect_ptrs(ae.params()));
  std::optional<ad::Adam> adam_d;
  if (adversarial) adam_d.emplace(ad::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, collect_ptrs(d->params()));

  Rng shuffle_rng = Rng(cfg.seed).fork(1);
  Rng ae_noise_rng = Rng(cfg.seed).fork(2);
  Rng d_noise_rng = Rng(cfg.seed).fork(3);

  std::vector<int> order(static_cast<std::size_t>(n_train));
  for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

  TrainLog log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int start = 0, bi = 0; start < n_train; start += batch, ++bi) {
      const int count = std::min(batch, n_train - start);
      std::vector<const PointCloud*> clouds;
      for (int i = 0; i < count; ++i)
        clouds.push_back(&split.train[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])].cloud);
      const ad::Tensor input_stack = stack_clouds(clouds);

      GenBatchRecord rec;
      rec.epoch = epoch;
      rec.batch = bi;

      BatchScores scores;
      ad::Tensor clean_fake;
      if (adversarial) {
        clean_fake = reconstruct_values(ae, input_stack, count);
        scores = discriminator_batch_scores(*d, input_stack, clean_fake, count);
        rec.l_d = scores.mean_fake - scores.mean_real;
        rec.l_df = scores.l_df;
      }

      const bool train_discriminator = adversarial && *rec.l_d >= cfg.d_alt_threshold;
      if (train_discriminator) {
        rec.side = TrainedSide::Discriminator;
        rec.l_c = metrics::chamfer_symmetric_stacked(clean_fake, input_stack, count);

        ad::Tape tape;
        const auto d_ids = bind_params(tape, d->params());
        const ad::NodeId sf = discriminator_forward_on_tape(tape, *d, d_ids, tape.leaf(clean_fake), count);
        const ad::NodeId sr = discriminator_forward_on_tape(tape, *d, d_ids, tape.leaf(input_stack), count);
        const ad::NodeId l_d = tape.sub(tape.mean_all(sf), tape.mean_all(sr));
        tape.backward(l_d);
        std::vector<ad::Tensor*> prm;
        std::vector<const ad::Tensor*> grd;
        for (std::size_t i = 0; i < d->params().size(); ++i) {
          prm.push_back(&d->params()[i]);
          grd.push_back(&tape.grad(d_ids[i]));
        }
        adam_d->step(prm, grd, ad::Adam::Direction::Descend);
      } else {
        rec.side = TrainedSide::Generator;

        // NAED: gradients are evaluated at a noise-shifted encoder point;
        // the update still applies to the clean parameters.
        std::vector<ad::Tensor> gen_values;
        gen_values.reserve(ae.params().size());
        for (const auto& p : ae.params()) gen_values.push_back(p);
        if (kind == GenKind::NAED && cfg.ae_param_noise_sigma > 0.0) {
          for (int t = 0; t < ae.encoder_param_count(); ++t) {
            auto& tensor = gen_values[static_cast<std::size_t>(t)];
            const double sigma = cfg.ae_param_noise_sigma * tensor_std(tensor);
            if (sigma <= 0.0) continue;  // zero-spread tensors get no noise
            for (int e = 0; e < tensor.size(); ++e) tensor[e] += ae_noise_rng.normal(0.0, sigma);
          }
          rec.ae_noise_applied = true;
        }

        ad::Tape tape;
        std::vector<ad::NodeId> ae_ids = bind_params(tape, gen_values);
        const ad::NodeId input = tape.leaf(input_stack);
        const ad::NodeId z = encoder_forward_on_tape(tape, ae, ae_ids, input, count);
        const ad::NodeId recon = decoder_forward_on_tape(tape, ae, ae_ids, z, count);
        const ad::NodeId l_c = tape.chamfer_loss(recon, input, count);
        ad::NodeId loss = l_c;

        if (need_features) {
          const BatchFeatures feats = classifier_features(*classifier, input_stack, count);
          const auto cls_ids = bind_params(tape, classifier->params());
          const auto cls_out = classifier_forward_on_tape(tape, *classifier, cls_ids, recon, count);
          if (cfg.w_f1 > 0.0) {
            const ad::NodeId l_f1 = tape.mean_squared_error(cls_out.pointwise, tape.leaf(feats.pointwise));
            rec.l_f1 = tape.value(l_f1).item();
            loss = tape.add(loss, tape.scale(l_f1, cfg.w_f1));
          }
          if (kind == GenKind::NAED && cfg.w_f2 > 0.0) {
            const ad::NodeId l_f2 = tape.mean_squared_error(cls_out.global, tape.leaf(feats.global));
            rec.l_f2 = tape.value(l_f2).item();
            loss = tape.add(loss, tape.scale(l_f2, cfg.w_f2));
          }
        }

        if (adversarial) {
          const auto d_ids = bind_params(tape, d->params());
          const ad::NodeId s = discriminator_forward_on_tape(tape, *d, d_ids, recon, count);
          const ad::NodeId one_minus = tape.add_const(tape.scale(s, -1.0), 1.0);
          const ad::NodeId l_df = tape.mean_all(tape.scale(tape.log(tape.clamp_min(one_minus, 1e-12)), -1.0));
          loss = tape.sub(loss, tape.scale(l_df, cfg.w_d));
        }

        rec.l_c = tape.value(l_c).item();
        tape.backward(loss);
        std::vector<ad::Tensor*> prm;
        std::vector<const ad::Tensor*> grd;
        for (std::size_t i = 0; i < ae.params().size(); ++i) {
          prm.push_back(&ae.params()[i]);
          grd.push_back(&tape.grad(ae_ids[i]));
        }
        adam_g.step(prm, grd, ad::Adam::Direction::Descend);
      }

      if (adversarial && *rec.l_d < cfg.d_noise_threshold) {
        for (auto& tensor : d->params()) {
          const double sigma = cfg.d_noise_sigma * tensor_std(tensor);
          if (sigma <= 0.0) continue;
          for (int e = 0; e < tensor.size(); ++e) tensor[e] += d_noise_rng.normal(0.0, sigma);
        }
        rec.d_noise_injected = true;
      }

      if (!std::isfinite(rec.l_c))
        throw NumericError("generator training: loss diverged at epoch " + std::to_string(epoch));
      log.batches.push_back(rec);
      if (cfg.on_batch) cfg.on_batch(rec, ae, d);
    }
  }
  return log;
}

}  // namespace

TrainLog train_ae(AutoencoderModel& ae, const DatasetSplit& split, const GenTrainConfig& config) {
  return train_generator_family(GenKind::AE, ae, nullptr, nullptr, split, config);
}

TrainLog train_aed(AutoencoderModel& ae, DiscriminatorModel& d, const ClassifierModel& classifier,
                   const DatasetSplit& split, const GenTrainConfig& config) {
  return train_generator_family(GenKind::AED, ae, &d, &classifier, split, config);
}

TrainLog train_naed(AutoencoderModel& ae, DiscriminatorModel& d, const ClassifierModel& classifier,
                    const DatasetSplit& split, const GenTrainConfig& config) {
  return train_generator_family(GenKind::NAED, ae, &d, &classifier, split, config);
}

double reconstruction_cd(const AutoencoderModel& ae, const std::vector<LabeledCloud>& instances) {
  if (instances.empty()) throw ContractError("reconstruction_cd: empty instance list");
  double sum = 0.0;
  for (const auto& lc : instances) {
    const PointCloud recon = decode(ae, encode(ae, lc.cloud));
    sum += metrics::chamfer_symmetric(recon, lc.cloud);
  }
  return sum / static_cast<double>(instances.size());
}

}  // namespace pcam
