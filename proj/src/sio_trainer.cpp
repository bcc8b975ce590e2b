/* Copyright 2026 The SIO Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "sio/sio_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>

namespace sio {

void SioConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("sio: alpha must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("sio: batch size must be >= 1");
  if (epochs < 1) throw ConfigError("sio: epochs must be >= 1");
  if (!(lr0 >= 0.0)) throw ConfigError("sio: lr0 must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("sio: momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("sio: weight decay must be >= 0");
  if (n_syn_per_class && *n_syn_per_class < 0) throw ConfigError("sio: n_syn_per_class < 0");
  if (outlier_batch_size && *outlier_batch_size < 1) throw ConfigError("sio: outlier batch < 1");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("sio: hidden dims must be >= 1");
  }
  validate_loss_mode(loss_mode);
}

BatchQuota batch_quota(double alpha, int batch_size) {
  const int n_real = round_half_away(alpha * double(batch_size));
  return {n_real, batch_size - n_real};
}

long steps_per_epoch(std::size_t n_real, int batch_size) {
  const auto b = static_cast<std::size_t>(batch_size);
  return static_cast<long>((n_real + b - 1) / b);
}

std::vector<std::size_t> epoch_stream(std::size_t n, std::uint64_t seed, long epoch_index) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, "epoch_shuffle", static_cast<std::uint64_t>(epoch_index));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

LabeledSet compose_batch(const LabeledSet& real, std::span<const std::size_t> real_rows,
                         const LabeledSet& syn, int n_syn, Rng& syn_rng, Rng& order_rng) {
  if (n_syn > 0 && syn.empty()) {
    throw ConfigError("compose_batch: synthetic share requested but the pool is empty");
  }
  const auto n_real = static_cast<Eigen::Index>(real_rows.size());
  LabeledSet batch;
  batch.num_classes = real.num_classes;
  batch.features.resize(n_real + n_syn, real.dim());
  batch.labels.resize(static_cast<std::size_t>(n_real + n_syn));
  for (Eigen::Index i = 0; i < n_real; ++i) {
    const auto r = real_rows[static_cast<std::size_t>(i)];
    batch.features.row(i) = real.features.row(static_cast<Eigen::Index>(r));
    batch.labels[static_cast<std::size_t>(i)] = real.labels[r];
  }
  if (n_syn > 0) {
    std::uniform_int_distribution<Eigen::Index> pick(0, syn.size() - 1);
    for (Eigen::Index i = n_real; i < n_real + n_syn; ++i) {
      const Eigen::Index r = pick(syn_rng);
      batch.features.row(i) = syn.features.row(r);
      batch.labels[static_cast<std::size_t>(i)] = syn.labels[static_cast<std::size_t>(r)];
    }
  }
  if (n_real > 0 && n_syn > 0) {
    std::vector<std::size_t> order(static_cast<std::size_t>(n_real + n_syn));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng);
    batch = batch.subset(order);
  }
  return batch;
}

LabeledSet limit_per_class(const LabeledSet& set, int n_per_class) {
  std::vector<std::size_t> taken(static_cast<std::size_t>(set.num_classes), 0);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    auto& t = taken[static_cast<std::size_t>(set.labels[i])];
    if (t < static_cast<std::size_t>(n_per_class)) {
      rows.push_back(i);
      ++t;
    }
  }
  return set.subset(rows);
}

namespace {
double train_accuracy(const MlpClassifier& model, const LabeledSet& set) {
  const auto pred = predict(model, set.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == set.labels[i];
  return double(hits) / double(pred.size());
}
}  // namespace

TrainRun train(const LabeledSet& real_train, const SyntheticPool* syn, const SioConfig& config,
               const LabeledSet* outliers) {
  config.validate();
  real_train.validate();
  if (real_train.empty()) throw ConfigError("train: empty real training set");
  const bool oe = std::holds_alternative<OutlierExposure>(config.loss_mode);
  if (oe != (outliers != nullptr)) {
    throw ConfigError("train: OE loss mode and an outlier set must be supplied together");
  }
  if (outliers && (outliers->empty() || outliers->dim() != real_train.dim())) {
    throw ConfigError("train: outlier set must be nonempty with matching dimension");
  }

  const BatchQuota quota = batch_quota(config.alpha, config.batch_size);
  LabeledSet syn_set;
  syn_set.num_classes = real_train.num_classes;
  syn_set.features.resize(0, real_train.dim());
  if (quota.n_syn > 0) {
    if (syn == nullptr || syn->samples.empty()) {
      throw ConfigError("train: alpha < 1 requires a nonempty synthetic pool");
    }
    if (syn->samples.dim() != real_train.dim()) {
      throw ConfigError("train: synthetic pool dimension does not match real data");
    }
    if (syn->samples.num_classes != real_train.num_classes) {
      throw ConfigError("train: synthetic pool class count does not match real data");
    }
    syn_set = config.n_syn_per_class ? limit_per_class(syn->samples, *config.n_syn_per_class)
                                     : syn->samples;
    if (syn_set.empty()) throw ConfigError("train: synthetic pool is empty after limiting");
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<int> dims;
  dims.push_back(static_cast<int>(real_train.dim()));
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(real_train.num_classes);

  TrainRun run;
  run.config = config;
  run.model = MlpClassifier::init(dims, derive_seed(config.seed, "init"));

  const std::size_t n_real = static_cast<std::size_t>(real_train.size());
  const long per_epoch = steps_per_epoch(n_real, config.batch_size);
  OptimState state = OptimState::for_model(run.model, config.lr0, per_epoch * config.epochs);
  state.momentum = config.momentum;
  state.nesterov = config.nesterov;
  state.weight_decay = config.weight_decay;

  Rng syn_rng = make_rng(config.seed, "synthetic_draws");
  Rng order_rng = make_rng(config.seed, "batch_order");
  Rng outlier_rng = make_rng(config.seed, "outlier_draws");
  const int n_out = config.outlier_batch_size.value_or(config.batch_size);
  Matrix outlier_batch;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto perm = epoch_stream(n_real, config.seed, epoch);
    std::size_t cursor = 0;
    double loss_sum = 0.0;
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.lr = cosine_lr(state.step, state.total_steps, state.lr0);
    for (long s = 0; s < per_epoch; ++s) {
      const std::size_t take =
          std::min(static_cast<std::size_t>(quota.n_real), n_real - cursor);
      std::span<const std::size_t> rows(perm.data() + cursor, take);
      cursor += take;
      const LabeledSet batch =
          compose_batch(real_train, rows, syn_set, quota.n_syn, syn_rng, order_rng);
      run.batch_counts.push_back({static_cast<int>(take), quota.n_syn});

      const Matrix* out_ptr = nullptr;
      if (outliers) {
        outlier_batch.resize(n_out, outliers->dim());
        std::uniform_int_distribution<Eigen::Index> pick(0, outliers->size() - 1);
        for (int i = 0; i < n_out; ++i) outlier_batch.row(i) = outliers->features.row(pick(outlier_rng));
        out_ptr = &outlier_batch;
      }
      const LossResult res = compute_loss(run.model, batch, config.loss_mode, out_ptr);
      loss_sum += res.value;
      sgd_step(run.model, res.gradients, state);
    }
    entry.mean_loss = loss_sum / double(per_epoch);
    entry.train_acc = train_accuracy(run.model, real_train);
    run.log.push_back(entry);
  }
  run.steps = state.step;
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void save_train_log(const TrainRun& run, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "epoch,mean_loss,lr,train_acc\n";
  for (const auto& e : run.log) {
    out << e.epoch << ',' << format_double(e.mean_loss) << ',' << format_double(e.lr) << ','
        << format_double(e.train_acc) << '\n';
  }
}

}  // namespace sio
