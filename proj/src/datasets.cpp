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

#include "sio/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace sio {

void LabeledSet::validate() const {
  if (features.cols() < 1) throw ConfigError("LabeledSet: dimension must be >= 1");
  if (num_classes < 1) throw ConfigError("LabeledSet: num_classes must be >= 1");
  if (labels.size() != static_cast<std::size_t>(features.rows())) {
    throw ConfigError("LabeledSet: label count " + std::to_string(labels.size()) +
                      " does not match row count " + std::to_string(features.rows()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ConfigError("LabeledSet: label " + std::to_string(labels[i]) + " at row " +
                        std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  if (!features.allFinite()) throw ConfigError("LabeledSet: non-finite feature value");
}

LabeledSet LabeledSet::subset(const std::vector<std::size_t>& rows) const {
  LabeledSet out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels[i] = labels[rows[i]];
  }
  return out;
}

std::vector<std::size_t> LabeledSet::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledSet LabeledSet::unlabeled(Matrix features) {
  LabeledSet out;
  out.labels.assign(static_cast<std::size_t>(features.rows()), 0);
  out.features = std::move(features);
  return out;
}

bool operator==(const LabeledSet& a, const LabeledSet& b) {
  return a.num_classes == b.num_classes && a.labels == b.labels &&
         a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
         a.features == b.features;
}

void BenchmarkSpec::validate() const {
  if (num_classes < 1 || dim < 1 || n_train_per_class < 1 || n_test_per_class < 1 ||
      n_near < 1 || n_far < 1) {
    throw ConfigError("BenchmarkSpec: all counts must be >= 1");
  }
  if (!(r_id > 0.0)) throw ConfigError("BenchmarkSpec: r_id must be > 0");
  if (!(r_far > r_id)) throw ConfigError("BenchmarkSpec: r_far must exceed r_id");
  if (!(spread > 0.0)) throw ConfigError("BenchmarkSpec: spread must be > 0");
  if (num_classes > 2 * dim) {
    throw ConfigError("BenchmarkSpec: K=" + std::to_string(num_classes) +
                      " exceeds the 2d=" + std::to_string(2 * dim) +
                      " axis positions available for class means");
  }
}

std::vector<Vector> class_means(const BenchmarkSpec& spec) {
  spec.validate();
  std::vector<Vector> means;
  for (int k = 0; k < spec.num_classes; ++k) {
    Vector m = Vector::Zero(spec.dim);
    m[k / 2] = (k % 2 == 0) ? spec.r_id : -spec.r_id;
    means.push_back(std::move(m));
  }
  return means;
}

namespace {

void fill_gaussian_rows(Matrix& out, Eigen::Index row0, Eigen::Index count, const Vector& center,
                        double std_dev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(row0 + i, j) = center[j] + std_dev * normal(rng);
    }
  }
}

LabeledSet make_id_split(const BenchmarkSpec& spec, const std::vector<Vector>& means, int per_class,
                         std::string_view purpose) {
  Rng rng = make_rng(spec.seed, purpose);
  LabeledSet set;
  set.num_classes = spec.num_classes;
  const Eigen::Index n = static_cast<Eigen::Index>(per_class) * spec.num_classes;
  set.features.resize(n, spec.dim);
  set.labels.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < spec.num_classes; ++k) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(k) * per_class;
    fill_gaussian_rows(set.features, row0, per_class, means[static_cast<std::size_t>(k)],
                       spec.spread, rng);
    std::fill_n(set.labels.begin() + row0, per_class, k);
  }
  return set;
}

void fill_uniform_box(Matrix& out, Eigen::Index row0, Eigen::Index count, double half_width,
                      Rng& rng) {
  std::uniform_real_distribution<double> unif(-half_width, half_width);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(row0 + i, j) = unif(rng);
  }
}

}  // namespace

BenchmarkSuite make_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  const auto means = class_means(spec);
  BenchmarkSuite suite;
  suite.spec = spec;
  suite.id_train = make_id_split(spec, means, spec.n_train_per_class, "id_train");
  suite.id_test = make_id_split(spec, means, spec.n_test_per_class, "id_test");

  // Near-OOD: Gaussians about midpoints of (k, k+1 mod K), cycling through pairs.
  {
    Rng rng = make_rng(spec.seed, "near_ood");
    Matrix x(spec.n_near, spec.dim);
    for (int i = 0; i < spec.n_near; ++i) {
      const auto k = static_cast<std::size_t>(i % spec.num_classes);
      const auto k_next = (k + 1) % static_cast<std::size_t>(spec.num_classes);
      const Vector mid = 0.5 * (means[k] + means[k_next]);
      fill_gaussian_rows(x, i, 1, mid, spec.spread, rng);
    }
    suite.near_ood = LabeledSet::unlabeled(std::move(x));
    suite.near_ood.num_classes = spec.num_classes;
  }

  // Far-OOD: first half uniform box, second half a Gaussian blob on the last axis.
  {
    Rng rng = make_rng(spec.seed, "far_ood");
    const double reach = spec.r_far * spec.r_id;
    const int n_box = spec.n_far / 2;
    Matrix x(spec.n_far, spec.dim);
    fill_uniform_box(x, 0, n_box, reach, rng);
    Vector center = Vector::Zero(spec.dim);
    center[spec.dim - 1] = reach;
    fill_gaussian_rows(x, n_box, spec.n_far - n_box, center, spec.spread, rng);
    suite.far_ood = LabeledSet::unlabeled(std::move(x));
    suite.far_ood.num_classes = spec.num_classes;
  }
  return suite;
}

LabeledSet make_aux_outliers(const BenchmarkSpec& spec, int n) {
  spec.validate();
  if (n < 1) throw ConfigError("make_aux_outliers: n must be >= 1");
  Rng rng = make_rng(spec.seed, "aux_outliers");
  Matrix x(n, spec.dim);
  fill_uniform_box(x, 0, n, spec.r_far * spec.r_id, rng);
  auto out = LabeledSet::unlabeled(std::move(x));
  out.num_classes = spec.num_classes;
  return out;
}

void save_csv(const LabeledSet& set, const std::filesystem::path& path) {
  set.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (Eigen::Index j = 0; j < set.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    for (Eigen::Index j = 0; j < set.dim(); ++j) out << format_double(set.features(i, j)) << ',';
    out << set.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LabeledSet load_csv(const std::filesystem::path& path, std::optional<int> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path.string());
  const std::string where = path.string();
  auto fail = [&](std::size_t line, const std::string& msg) {
    throw ParseError(where + ":" + std::to_string(line) + ": " + msg);
  };

  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_string(line, ',');
  if (header.size() < 2 || header.back() != "label") fail(1, "header must end with 'label'");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      fail(1, "expected column 'f" + std::to_string(j) + "', got '" + header[j] + "'");
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_string(line, ',');
    if (cells.size() != d + 1) {
      fail(line_no, "expected " + std::to_string(d + 1) + " cells, got " +
                        std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      try {
        v = parse_double(cells[j]);
      } catch (const ParseError&) {
        fail(line_no, "non-numeric cell '" + cells[j] + "' in column f" + std::to_string(j));
      }
      if (!std::isfinite(v)) fail(line_no, "non-finite value in column f" + std::to_string(j));
      values.push_back(v);
    }
    long long y = 0;
    try {
      y = parse_int(cells[d]);
    } catch (const ParseError&) {
      fail(line_no, "non-numeric label '" + cells[d] + "'");
    }
    if (y < 0 || (num_classes && y >= *num_classes)) {
      fail(line_no, "label " + std::to_string(y) + " out of range");
    }
    labels.push_back(static_cast<int>(y));
  }

  LabeledSet set;
  const auto n = static_cast<Eigen::Index>(labels.size());
  set.features.resize(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
      set.features(i, j) = values[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
    }
  }
  set.labels = std::move(labels);
  if (num_classes) {
    set.num_classes = *num_classes;
  } else {
    int max_label = 0;
    for (int y : set.labels) max_label = std::max(max_label, y);
    set.num_classes = max_label + 1;
  }
  return set;
}

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split: fraction must lie in (0, 1)");
  }
  if (set.size() < 2) throw ConfigError("split: need at least 2 samples");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(set.num_classes));
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    by_class[static_cast<std::size_t>(set.labels[i])].push_back(i);
  }
  Rng rng = make_rng(seed, "split");
  std::vector<std::size_t> first, second;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto take = static_cast<std::size_t>(
        round_half_away(fraction * static_cast<double>(rows.size())));
    first.insert(first.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    second.insert(second.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {set.subset(first), set.subset(second)};
}

}  // namespace sio
