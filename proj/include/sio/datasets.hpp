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

#ifndef SIO_DATASETS_HPP_
#define SIO_DATASETS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sio/common.hpp"

namespace sio {

/// Feature rows with integer class labels. Also carries unlabeled sets
/// (OOD samples), whose labels are all zero and ignored.
struct LabeledSet {
  Matrix features;          // n x d
  std::vector<int> labels;  // n entries in [0, num_classes)
  int num_classes = 1;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  bool empty() const { return features.rows() == 0; }

  /// Throws ConfigError when labels or features break the container invariants.
  void validate() const;

  /// Rows with the given indices, in the order given.
  LabeledSet subset(const std::vector<std::size_t>& rows) const;

  std::vector<std::size_t> class_counts() const;

  static LabeledSet unlabeled(Matrix features);
};

bool operator==(const LabeledSet& a, const LabeledSet& b);

struct BenchmarkSpec {
  int num_classes = 8;
  int dim = 16;
  int n_train_per_class = 200;
  int n_test_per_class = 200;
  int n_near = 1600;
  int n_far = 1600;
  double r_id = 1.0;
  double spread = 0.29;
  double r_far = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BenchmarkSuite {
  LabeledSet id_train;
  LabeledSet id_test;
  LabeledSet near_ood;
  LabeledSet far_ood;
  BenchmarkSpec spec;
};

/// Class means at +r_id e_0, -r_id e_0, +r_id e_1, ... (K <= 2d).
std::vector<Vector> class_means(const BenchmarkSpec& spec);

BenchmarkSuite make_benchmark(const BenchmarkSpec& spec);

/// Auxiliary training outliers for outlier exposure: uniform in the far-OOD
/// box, drawn from a stream disjoint from every benchmark split.
LabeledSet make_aux_outliers(const BenchmarkSpec& spec, int n);

void save_csv(const LabeledSet& set, const std::filesystem::path& path);

/// Reads `f0,...,f{d-1},label`. When num_classes is given, labels must lie
/// below it; otherwise K is one past the largest label.
LabeledSet load_csv(const std::filesystem::path& path,
                    std::optional<int> num_classes = std::nullopt);

/// Stratified split; the first part receives round(fraction * n_k) rows of
/// class k. Rows keep their original relative order within each part.
std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double fraction,
                                        std::uint64_t seed);

}  // namespace sio

#endif  // SIO_DATASETS_HPP_
