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

#ifndef SIO_EXPERIMENT_HPP_
#define SIO_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sio/datasets.hpp"
#include "sio/generator.hpp"
#include "sio/metrics.hpp"
#include "sio/scoring.hpp"
#include "sio/sio_trainer.hpp"

namespace sio {

enum class SweepAxis { None, Alpha, NSyn, Quality };

std::string axis_name(SweepAxis axis);

struct GeneratorSettings {
  /// Ridge for the class Gaussians; default_ridge(id_train) when <= 0.
  double ridge = 0.0;
  int n_syn_per_class = 5000;
  double quality = 1.0;
  bool pseudo_label = false;
};

struct ExperimentConfig {
  BenchmarkSpec benchmark;
  std::uint64_t seed_base = 0;
  GeneratorSettings generator;
  SioConfig sio;
  std::vector<ScoreMethod> scorers = {ScoreMethod::Msp, ScoreMethod::Energy, ScoreMethod::Mls,
                                      ScoreMethod::Knn};
  ScorerParams scorer_params;
  SweepAxis sweep_axis = SweepAxis::None;
  std::vector<double> sweep_values;
  std::vector<std::uint64_t> seeds = {0};
  std::filesystem::path out_dir = "out";
  /// Outliers for OE training.
  int n_aux_outliers = 2000;
  /// Worker threads for independent runs; 0 picks the hardware count.
  int threads = 1;

  void validate() const;
  std::uint64_t hash() const;
  /// Canonical `key = value` text; parse_config(to_text()) reproduces the config.
  std::string to_text() const;
};

/// Flat `key = value` text with `#` comments. Unknown keys and malformed
/// values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Seed-specific benchmark spec: the benchmark seed is derived from
/// (seed_base, seed).
BenchmarkSpec benchmark_for_seed(const ExperimentConfig& config, std::uint64_t seed);

struct ResultRow {
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string arm;  // "baseline" or "sio"
  std::string scorer;
  std::string split;
  double auroc = 0.0;
  double fpr95 = 0.0;
  double id_acc = 0.0;
  double frechet = 0.0;
  long steps = 0;
};

using ResultTable = std::vector<ResultRow>;

/// Generator fit on id_train, optional pseudo-labeling by `labeler`,
/// degradation and pool sampling for one seed.
SyntheticPool make_pool(const ExperimentConfig& config, const BenchmarkSuite& bench,
                        std::uint64_t seed, const GeneratorSettings& gen,
                        const MlpClassifier* labeler = nullptr);

/// Per-seed training config for an arm.
SioConfig arm_config(const ExperimentConfig& config, std::uint64_t seed, double alpha);

/// Runs every (sweep value, seed) cell and returns rows sorted by
/// (value, seed, arm, scorer, split).
ResultTable run_experiment(const ExperimentConfig& config);

inline constexpr const char* kResultsHeader =
    "axis,value,seed,arm,scorer,split,auroc,fpr95,id_acc,frechet,steps";

void save_results(const ResultTable& table, const std::filesystem::path& path);
ResultTable load_results(const std::filesystem::path& path);

struct SummaryRow {
  std::string axis;
  double value = 0.0;
  std::string arm, scorer, split;
  double auroc_mean = 0.0, auroc_std = 0.0;
  double fpr95_mean = 0.0, fpr95_std = 0.0;
  double id_acc_mean = 0.0, id_acc_std = 0.0;
  double frechet_mean = 0.0;
  std::size_t n_seeds = 0;
};

/// Seed mean and sample standard deviation (0 for a single seed) per
/// (axis, value, arm, scorer, split).
std::vector<SummaryRow> summarize(const ResultTable& table);

/// Writes results.csv, summary_<axis>.csv, one line chart per axis and the
/// accuracy-vs-near-AUROC scatter chart. Returns the paths written.
std::vector<std::filesystem::path> write_report(const ResultTable& table,
                                                const std::filesystem::path& out_dir);

}  // namespace sio

#endif  // SIO_EXPERIMENT_HPP_
