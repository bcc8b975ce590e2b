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

#ifndef SIO_NNET_HPP_
#define SIO_NNET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sio/common.hpp"
#include "sio/datasets.hpp"

namespace sio {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Parameter-shaped container, used for gradients and momentum buffers.
using LayerStack = std::vector<DenseLayer>;

struct ForwardResult {
  Vector logits;
  /// Post-activation of the last hidden layer; the input itself when the
  /// network has no hidden layer.
  Vector penultimate;
};

struct BatchForward {
  Matrix logits;       // n x K
  Matrix penultimate;  // n x h
};

/// Dense ReLU network with linear logits.
class MlpClassifier {
 public:
  MlpClassifier() = default;
  explicit MlpClassifier(std::vector<int> layer_dims);

  /// He-normal weights N(0, 2/fan_in), zero biases.
  static MlpClassifier init(const std::vector<int>& layer_dims, std::uint64_t seed);

  ForwardResult forward(const Vector& x) const;
  BatchForward forward_batch(const Matrix& x) const;

  /// Logits from penultimate features through the last layer only.
  Vector head(const Vector& penultimate) const;

  int input_dim() const { return dims_.front(); }
  int num_classes() const { return dims_.back(); }
  int feature_dim() const { return dims_[dims_.size() - 2]; }
  const std::vector<int>& dims() const { return dims_; }

  LayerStack& layers() { return layers_; }
  const LayerStack& layers() const { return layers_; }
  const DenseLayer& last_layer() const { return layers_.back(); }

  bool operator==(const MlpClassifier& other) const;

 private:
  std::vector<int> dims_;
  LayerStack layers_;
};

LayerStack zeros_like(const LayerStack& params);

struct CrossEntropy {};
struct OutlierExposure {
  double lambda = 0.5;
};
struct LogitNorm {
  double tau = 0.04;
};
using LossMode = std::variant<CrossEntropy, OutlierExposure, LogitNorm>;

std::string loss_mode_name(const LossMode& mode);
void validate_loss_mode(const LossMode& mode);

struct LossResult {
  double value = 0.0;
  LayerStack gradients;
};

/// Batch-mean loss and exact parameter gradients. OE mode requires
/// `outliers`; its uniform-target term is averaged over the outlier batch and
/// weighted by lambda.
LossResult compute_loss(const MlpClassifier& model, const LabeledSet& batch, const LossMode& mode,
                        const Matrix* outliers = nullptr);

inline constexpr double kLogitNormGuard = 1e-12;

struct OptimState {
  double lr0 = 0.1;
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 5e-4;
  LayerStack velocity;
  long step = 0;
  long total_steps = 1;

  static OptimState for_model(const MlpClassifier& model, double lr0, long total_steps);
};

/// One Nesterov (or heavy-ball) SGD step with L2 weight decay on all
/// parameters at the cosine-scheduled rate for the current step.
void sgd_step(MlpClassifier& model, const LayerStack& gradients, OptimState& state);

double cosine_lr(long step, long total_steps, double lr0);

/// Gradient of -log max_i softmax(f(x))_i with respect to x.
Vector input_gradient(const MlpClassifier& model, const Vector& x);

/// `mlp v1`, layer dims line, then per layer the weight rows and one bias line.
void save_checkpoint(const MlpClassifier& model, const std::filesystem::path& path);
MlpClassifier load_checkpoint(const std::filesystem::path& path);

/// Predicted class per row (ties to the lowest index).
std::vector<int> predict(const MlpClassifier& model, const Matrix& x);

}  // namespace sio

#endif  // SIO_NNET_HPP_
