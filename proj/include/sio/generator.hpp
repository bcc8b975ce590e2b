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

#ifndef SIO_GENERATOR_HPP_
#define SIO_GENERATOR_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sio/common.hpp"
#include "sio/datasets.hpp"
#include "sio/nnet.hpp"

namespace sio {

struct Gaussian {
  Vector mean;
  Matrix covariance;
};

/// Per-class Gaussians (conditional) or one pooled Gaussian (unconditional)
/// standing in for a trained generative model of the ID data.
struct ClassGaussianModel {
  std::vector<Gaussian> components;  // K entries when conditional, else 1
  int num_classes = 1;
  double ridge = 1e-6;
  bool conditional = true;
  double quality = 1.0;

  int dim() const { return static_cast<int>(components.front().mean.size()); }
  std::uint64_t hash() const;
};

struct PoolProvenance {
  std::uint64_t model_hash = 0;
  std::uint64_t seed = 0;
  double quality = 1.0;
  bool pseudo_labeled = false;
};

struct SyntheticPool {
  LabeledSet samples;
  PoolProvenance provenance;
};

/// 1e-6 times the mean per-feature variance of `data`.
double default_ridge(const LabeledSet& data);

/// Maximum-likelihood mean and (ridge-regularized) covariance, per class or pooled.
ClassGaussianModel fit_class_gaussians(const LabeledSet& train, double ridge, bool conditional);

/// Conditional: n_per_class draws from each class component, labelled by class.
/// Unconditional: n_per_class * K draws from the pooled component, labelled 0
/// until pseudo_label assigns classes.
SyntheticPool sample(const ClassGaussianModel& model, int n_per_class, std::uint64_t seed);

/// Replaces labels by the classifier's argmax prediction.
SyntheticPool pseudo_label(const SyntheticPool& pool, const MlpClassifier& classifier);

/// Fidelity knob: shifts each mean by (1 - q) * shift_scale along a fixed
/// random unit direction and blends each covariance toward its isotropic
/// equal-trace counterpart. q = 1 returns the model unchanged.
ClassGaussianModel degrade(const ClassGaussianModel& model, double q, std::uint64_t jitter_seed,
                           double shift_scale);

/// Squared 2-Wasserstein distance between Gaussians.
double frechet_distance(const Gaussian& a, const Gaussian& b);

/// Pooled ridge-regularized Gaussian fit per set, then frechet_distance.
/// The ridge is default_ridge(real) for both fits.
double pool_frechet(const SyntheticPool& pool, const LabeledSet& real);
double set_frechet(const LabeledSet& a, const LabeledSet& b);

/// Symmetric PSD square root via eigendecomposition with eigenvalues clamped at 0.
Matrix symmetric_sqrt(const Matrix& m);

/// `classgauss v1 K d`, then per component one mean line and d covariance
/// lines, then a `meta` line with ridge, conditional flag, class count, quality.
void save_model(const ClassGaussianModel& model, const std::filesystem::path& path);
ClassGaussianModel load_model(const std::filesystem::path& path);

}  // namespace sio

#endif  // SIO_GENERATOR_HPP_
