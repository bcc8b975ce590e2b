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

// Plain real-data trainer with no synthetic plumbing at all: epoch shuffle,
// full batches of B real rows (last batch shorter), CE/LogitNorm loss,
// Nesterov SGD on the cosine schedule.
#ifndef SIO_TESTS_REFERENCE_TRAINER_HPP_
#define SIO_TESTS_REFERENCE_TRAINER_HPP_

#include <algorithm>
#include <numeric>
#include <vector>

#include "sio/nnet.hpp"
#include "sio/sio_trainer.hpp"

namespace reference {

inline sio::MlpClassifier train_real_only(const sio::LabeledSet& real, const sio::SioConfig& c) {
  std::vector<int> dims{int(real.dim())};
  dims.insert(dims.end(), c.hidden_dims.begin(), c.hidden_dims.end());
  dims.push_back(real.num_classes);
  auto model = sio::MlpClassifier::init(dims, sio::derive_seed(c.seed, "init"));
  const std::size_t n = std::size_t(real.size());
  const std::size_t b = std::size_t(c.batch_size);
  const long per_epoch = long((n + b - 1) / b);
  auto opt = sio::OptimState::for_model(model, c.lr0, per_epoch * c.epochs);
  opt.momentum = c.momentum;
  opt.nesterov = c.nesterov;
  opt.weight_decay = c.weight_decay;
  for (int e = 0; e < c.epochs; ++e) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    sio::Rng rng = sio::make_rng(c.seed, "epoch_shuffle", std::uint64_t(e));
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t start = 0; start < n; start += b) {
      const std::vector<std::size_t> rows(perm.begin() + long(start),
                                          perm.begin() + long(std::min(n, start + b)));
      const auto res = sio::compute_loss(model, real.subset(rows), c.loss_mode);
      sio::sgd_step(model, res.gradients, opt);
    }
  }
  return model;
}

}  // namespace reference

#endif  // SIO_TESTS_REFERENCE_TRAINER_HPP_
