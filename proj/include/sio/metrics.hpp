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

#ifndef SIO_METRICS_HPP_
#define SIO_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sio/datasets.hpp"
#include "sio/nnet.hpp"
#include "sio/scoring.hpp"

namespace sio {

/// P(s_ood > s_id) + P(s_ood = s_id) / 2, via midranks. OOD is positive.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Smallest ID false-positive rate over thresholds (score >= t flags OOD)
/// whose OOD true-positive rate reaches tpr_target.
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double tpr_target = 0.95);

double accuracy(const MlpClassifier& model, const LabeledSet& set);

struct MetricEntry {
  std::string scorer;
  std::string split;  // "near" or "far"
  double auroc = 0.5;
  double fpr95 = 1.0;
};

struct MetricReport {
  std::vector<MetricEntry> entries;
  double id_accuracy = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  const MetricEntry& find(const std::string& scorer, const std::string& split) const;
};

struct ScoredSplits {
  std::vector<double> id_test, near_ood, far_ood;
};

/// Fits each scorer on id_train under the frozen model, then scores id_test,
/// near_ood and far_ood.
std::vector<ScoredSplits> score_benchmark(const MlpClassifier& model,
                                          const BenchmarkSuite& bench,
                                          const std::vector<ScoreMethod>& methods,
                                          const ScorerParams& params,
                                          FitStats* fitted = nullptr);

MetricReport evaluate(const MlpClassifier& model, const BenchmarkSuite& bench,
                      const std::vector<ScoreMethod>& methods,
                      const ScorerParams& params = {});

}  // namespace sio

#endif  // SIO_METRICS_HPP_
