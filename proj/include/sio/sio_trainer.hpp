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

#ifndef SIO_SIO_TRAINER_HPP_
#define SIO_SIO_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sio/datasets.hpp"
#include "sio/generator.hpp"
#include "sio/nnet.hpp"

namespace sio {

/// Training recipe for the weighted real + synthetic objective. alpha is the
/// share of real samples in every batch; alpha = 1 is plain real-data training.
struct SioConfig {
  double alpha = 0.8;
  int batch_size = 128;
  int epochs = 30;
  LossMode loss_mode = CrossEntropy{};
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool nesterov = true;
  std::uint64_t seed = 0;
  /// Cap on synthetic samples used per class; the whole pool when unset.
  std::optional<int> n_syn_per_class;
  std::vector<int> hidden_dims = {64, 64, 64, 64, 64};
  /// Outlier rows per step in OE mode; batch_size when unset.
  std::optional<int> outlier_batch_size;

  void validate() const;
};

struct BatchQuota {
  int n_real = 0;
  int n_syn = 0;
};

/// n_real = round(alpha * B) (half away from zero), n_syn = B - n_real.
BatchQuota batch_quota(double alpha, int batch_size);

/// Steps per epoch: ceil(n_real / B), independent of alpha, so every arm
/// takes the same number of gradient steps.
long steps_per_epoch(std::size_t n_real, int batch_size);

/// Deterministic shuffle of [0, n) for one epoch.
std::vector<std::size_t> epoch_stream(std::size_t n, std::uint64_t seed, long epoch_index);

/// Real rows (in stream order) followed by n_syn uniform draws with
/// replacement from the pool; the result is shuffled with `order_rng` when
/// both blocks are nonempty.
LabeledSet compose_batch(const LabeledSet& real, std::span<const std::size_t> real_rows,
                         const LabeledSet& syn, int n_syn, Rng& syn_rng, Rng& order_rng);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;  // rate at the epoch's first step
  double train_acc = 0.0;
};

struct TrainRun {
  MlpClassifier model;
  std::vector<EpochLog> log;
  SioConfig config;
  double wall_seconds = 0.0;
  long steps = 0;
  /// Batch composition actually used, per step (for auditing).
  std::vector<BatchQuota> batch_counts;
};

/// Trains on id_train mixed with the pool. OE mode needs `outliers`.
TrainRun train(const LabeledSet& real_train, const SyntheticPool* syn, const SioConfig& config,
               const LabeledSet* outliers = nullptr);

inline TrainRun train(const BenchmarkSuite& bench, const SyntheticPool* syn,
                      const SioConfig& config, const LabeledSet* outliers = nullptr) {
  return train(bench.id_train, syn, config, outliers);
}

/// `epoch,mean_loss,lr,train_acc`
void save_train_log(const TrainRun& run, const std::filesystem::path& path);

/// Pool restricted to the first n rows of each class label.
LabeledSet limit_per_class(const LabeledSet& set, int n_per_class);

}  // namespace sio

#endif  // SIO_SIO_TRAINER_HPP_
