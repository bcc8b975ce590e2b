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

#include "sio/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

namespace sio {

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  if (id_scores.empty() || ood_scores.empty()) throw ConfigError("auroc: empty score list");
  const std::size_t n_id = id_scores.size(), n_ood = ood_scores.size(), n = n_id + n_ood;
  std::vector<std::pair<double, bool>> all;  // (score, is_ood)
  all.reserve(n);
  for (double s : id_scores) all.emplace_back(s, false);
  for (double s : ood_scores) all.emplace_back(s, true);
  for (const auto& [s, _] : all) {
    if (!std::isfinite(s)) throw std::runtime_error("auroc: non-finite score");
  }
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Ranks are 1-based; a tie block spanning [i, j) shares rank (i + 1 + j) / 2.
  // Doubled ranks stay integral.
  long long doubled_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const long long doubled_mid = static_cast<long long>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].second) doubled_rank_sum += doubled_mid;
    }
    i = j;
  }
  const long long no = static_cast<long long>(n_ood);
  const long long doubled_u = doubled_rank_sum - no * (no + 1);
  return double(doubled_u) / (2.0 * double(n_id) * double(n_ood));
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double tpr_target) {
  if (id_scores.empty() || ood_scores.empty()) throw ConfigError("fpr_at_tpr: empty score list");
  if (!(tpr_target >= 0.0 && tpr_target <= 1.0)) {
    throw ConfigError("fpr_at_tpr: target must lie in [0, 1]");
  }
  const double n_ood = double(ood_scores.size());
  std::size_t need = 0;  // fewest OOD samples that must be flagged
  while (double(need) / n_ood < tpr_target) ++need;
  if (need == 0) return 0.0;

  std::vector<double> ood(ood_scores.begin(), ood_scores.end());
  std::sort(ood.begin(), ood.end(), std::greater<>());
  // The largest threshold flagging `need` OOD samples is the need-th largest score.
  const double threshold = ood[need - 1];
  const auto flagged = std::count_if(id_scores.begin(), id_scores.end(),
                                     [&](double s) { return s >= threshold; });
  return double(flagged) / double(id_scores.size());
}

double accuracy(const MlpClassifier& model, const LabeledSet& set) {
  if (set.empty()) throw ConfigError("accuracy: empty set");
  const auto pred = predict(model, set.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == set.labels[i];
  return double(hits) / double(pred.size());
}

const MetricEntry& MetricReport::find(const std::string& scorer, const std::string& split) const {
  for (const auto& e : entries) {
    if (e.scorer == scorer && e.split == split) return e;
  }
  throw ConfigError("report has no entry for " + scorer + "/" + split);
}

std::vector<ScoredSplits> score_benchmark(const MlpClassifier& model, const BenchmarkSuite& bench,
                                          const std::vector<ScoreMethod>& methods,
                                          const ScorerParams& params, FitStats* fitted) {
  const FitStats stats = fit_scorers(model, bench.id_train, methods, params);
  std::vector<ScoredSplits> out;
  for (ScoreMethod m : methods) {
    out.push_back({score_batch(m, model, stats, params, bench.id_test.features),
                   score_batch(m, model, stats, params, bench.near_ood.features),
                   score_batch(m, model, stats, params, bench.far_ood.features)});
  }
  if (fitted) *fitted = stats;
  return out;
}

MetricReport evaluate(const MlpClassifier& model, const BenchmarkSuite& bench,
                      const std::vector<ScoreMethod>& methods, const ScorerParams& params) {
  const auto start = std::chrono::steady_clock::now();
  MetricReport report;
  report.seed = bench.spec.seed;
  report.id_accuracy = accuracy(model, bench.id_test);
  const auto scored = score_benchmark(model, bench, methods, params);
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const auto name = method_name(methods[i]);
    const auto& s = scored[i];
    report.entries.push_back(
        {name, "near", auroc(s.id_test, s.near_ood), fpr_at_tpr(s.id_test, s.near_ood)});
    report.entries.push_back(
        {name, "far", auroc(s.id_test, s.far_ood), fpr_at_tpr(s.id_test, s.far_ood)});
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace sio
