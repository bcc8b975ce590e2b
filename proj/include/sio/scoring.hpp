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

#ifndef SIO_SCORING_HPP_
#define SIO_SCORING_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sio/common.hpp"
#include "sio/datasets.hpp"
#include "sio/nnet.hpp"

// Post-hoc OOD scorers. Every score follows one orientation: higher means
// more OOD, so a detector flags a sample when score >= threshold.

namespace sio {

enum class ScoreMethod { Msp, TempScale, Odin, Energy, Mls, Klm, React, Knn, Dice, GradNorm, Vim };

std::string method_name(ScoreMethod m);
/// Accepts the canonical names plus the alias "ebo" for energy.
ScoreMethod parse_method(const std::string& name);
std::vector<ScoreMethod> all_methods();

/// -max softmax(logits / T); T = 1 is MSP, other T is temperature scaling.
double score_msp(const Vector& logits, double temperature = 1.0);
/// -max logit.
double score_mls(const Vector& logits);
/// -T log sum exp(logits / T).
double score_energy(const Vector& logits, double temperature = 1.0);

/// MSP at temperature T after stepping the input against the gradient of
/// -log max softmax by eps (sign only).
double score_odin(const MlpClassifier& model, const Vector& x, double temperature, double eps);

/// p-th percentile (linear interpolation) of every entry of `id_features`.
double fit_react(const Matrix& id_features, double percentile);
Vector clip_features(const Vector& feature, double threshold);
double score_react(const MlpClassifier& model, const Vector& x, double threshold);
double score_react_features(const MlpClassifier& model, const Vector& feature, double threshold);

struct KnnIndex {
  Matrix points;  // stored (possibly normalized) features
  int k = 1;
  bool normalize = true;
};
KnnIndex fit_knn(const Matrix& id_features, int k, bool normalize);
/// Euclidean distance to the k-th nearest stored point (exact scan).
double score_knn(const Vector& feature, const KnnIndex& index);

struct DiceMask {
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> keep;  // K x h
  double percent = 100.0;
};
/// Keeps, per output unit, the round(p/100 * h) weights with the largest
/// contribution W_ij * mean(phi_j); ties go to the lower index.
DiceMask fit_dice(const Matrix& id_features, const Matrix& weight, double percent);
double score_dice(const Vector& feature, const Matrix& weight, const Vector& bias,
                  const DiceMask& mask);

struct KlmTemplates {
  Matrix templates;  // K x K, row k = mean softmax of class k
};
KlmTemplates fit_klm(const Matrix& id_probs, const std::vector<int>& labels, int num_classes);
/// min_k KL(probs || template_k) with template entries floored at 1e-12.
double score_klm(const Vector& probs, const KlmTemplates& templates);
double kl_divergence(const Vector& p, const Vector& q);

/// -||softmax - uniform||_1 * ||phi||_1 (L1 norm of the last-layer gradient
/// of the uniform-target cross-entropy).
double score_gradnorm(const MlpClassifier& model, const Vector& x);
double gradnorm_from(const Vector& probs, const Vector& feature);

struct VimParams {
  Vector center;  // ID feature mean
  Matrix basis;   // h x d', orthonormal principal directions
  double alpha = 1.0;
};
/// subspace_dim defaults to min(ceil(h/2), h-1).
VimParams fit_vim(const Matrix& id_features, const Matrix& id_logits,
                  std::optional<int> subspace_dim = std::nullopt);
double vim_residual(const Vector& feature, const VimParams& params);
double score_vim(const Vector& feature, const Vector& logits, const VimParams& params);

struct DetectorConfig {
  double threshold = 0.0;
  ScoreMethod method = ScoreMethod::Msp;
};
enum class Verdict { Id, Ood };
/// OOD iff score >= threshold.
Verdict detect(double score, const DetectorConfig& config);

/// Per-scorer knobs with their defaults.
struct ScorerParams {
  double temp_scale_t = 1.5;
  double energy_t = 1.0;
  double odin_t = 1000.0;
  /// Absolute perturbation size; when unset, 0.0014 times the mean
  /// per-feature standard deviation of the fit data.
  std::optional<double> odin_eps;
  double react_percentile = 90.0;
  int knn_k = 50;
  bool knn_normalize = true;
  double dice_percent = 70.0;
  std::optional<int> vim_dim;
};

struct FitStats {
  std::optional<double> react_threshold;
  std::optional<KnnIndex> knn;
  std::optional<DiceMask> dice;
  std::optional<KlmTemplates> klm;
  std::optional<VimParams> vim;
  std::optional<double> odin_eps;
};

/// Fits whatever the listed methods need from ID data under the frozen model.
/// Fit failures are rethrown as FitError naming the scorer.
FitStats fit_scorers(const MlpClassifier& model, const LabeledSet& id_fit,
                     const std::vector<ScoreMethod>& methods, const ScorerParams& params);

std::vector<double> score_batch(ScoreMethod method, const MlpClassifier& model,
                                const FitStats& stats, const ScorerParams& params,
                                const Matrix& x);

/// Versioned text blocks keyed by method tag.
void save_fit_stats(const FitStats& stats, const std::filesystem::path& path);
FitStats load_fit_stats(const std::filesystem::path& path);

struct ScoreDumpRow {
  std::size_t sample_id = 0;
  std::string split;
  std::string method;
  double score = 0.0;
};
/// `sample_id,split,method,score`
void save_score_dump(const std::vector<ScoreDumpRow>& rows, const std::filesystem::path& path);

}  // namespace sio

#endif  // SIO_SCORING_HPP_
