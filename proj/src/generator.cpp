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

#include "sio/generator.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sio {

namespace {

std::string serialize(const ClassGaussianModel& model) {
  std::ostringstream out;
  const int d = model.dim();
  out << "classgauss v1 " << model.components.size() << ' ' << d << '\n';
  for (const auto& c : model.components) {
    for (int j = 0; j < d; ++j) out << (j ? " " : "") << format_double(c.mean[j]);
    out << '\n';
    for (int r = 0; r < d; ++r) {
      for (int j = 0; j < d; ++j) out << (j ? " " : "") << format_double(c.covariance(r, j));
      out << '\n';
    }
  }
  out << "meta " << format_double(model.ridge) << ' ' << (model.conditional ? 1 : 0) << ' '
      << model.num_classes << ' ' << format_double(model.quality) << '\n';
  return out.str();
}

Gaussian fit_gaussian(const Matrix& x, double ridge) {
  Gaussian g;
  g.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / double(x.rows());
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
  g.covariance.diagonal().array() += ridge;
  return g;
}

void check_covariance(const Matrix& s, const char* which) {
  if (s.rows() != s.cols()) throw ConfigError(std::string(which) + " covariance is not square");
  const double scale = 1.0 + s.cwiseAbs().maxCoeff();
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ConfigError(std::string(which) + " covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw ConfigError(std::string(which) + " covariance is indefinite");
  }
}

}  // namespace

std::uint64_t ClassGaussianModel::hash() const { return fnv1a(serialize(*this)); }

double default_ridge(const LabeledSet& data) {
  if (data.size() < 2) return 1e-6;
  const Matrix centered = data.features.rowwise() - data.features.colwise().mean();
  const double mean_var = centered.array().square().sum() / double(data.size() * data.dim());
  return mean_var > 0.0 ? 1e-6 * mean_var : 1e-6;
}

ClassGaussianModel fit_class_gaussians(const LabeledSet& train, double ridge, bool conditional) {
  if (!(ridge > 0.0)) throw ConfigError("fit_class_gaussians: ridge must be > 0");
  train.validate();
  ClassGaussianModel model;
  model.num_classes = train.num_classes;
  model.ridge = ridge;
  model.conditional = conditional;
  if (!conditional) {
    if (train.size() < 2) throw FitError("fit_class_gaussians: need at least 2 samples");
    model.components.push_back(fit_gaussian(train.features, ridge));
    return model;
  }
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(train.num_classes));
  for (std::size_t i = 0; i < train.labels.size(); ++i) {
    rows[static_cast<std::size_t>(train.labels[i])].push_back(i);
  }
  for (int k = 0; k < train.num_classes; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    if (r.size() < 2) {
      throw FitError("fit_class_gaussians: class " + std::to_string(k) + " has " +
                     std::to_string(r.size()) + " samples, need at least 2");
    }
    model.components.push_back(fit_gaussian(train.subset(r).features, ridge));
  }
  return model;
}

SyntheticPool sample(const ClassGaussianModel& model, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 0) throw ConfigError("sample: n_per_class must be >= 0");
  const int d = model.dim();
  const int draws_per_component = model.conditional ? n_per_class : n_per_class * model.num_classes;
  const auto total =
      static_cast<Eigen::Index>(draws_per_component) * static_cast<Eigen::Index>(model.components.size());

  SyntheticPool pool;
  pool.provenance = {model.hash(), seed, model.quality, false};
  pool.samples.num_classes = model.num_classes;
  pool.samples.features.resize(total, d);
  pool.samples.labels.assign(static_cast<std::size_t>(total), 0);

  Rng rng = make_rng(seed, "generator_sample");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(d);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    const auto& c = model.components[k];
    Eigen::LLT<Matrix> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw FitError("sample: covariance of component " + std::to_string(k) +
                     " is not positive definite");
    }
    const Matrix chol = llt.matrixL();
    for (int i = 0; i < draws_per_component; ++i, ++row) {
      for (int j = 0; j < d; ++j) z[j] = normal(rng);
      pool.samples.features.row(row) = (c.mean + chol * z).transpose();
      pool.samples.labels[static_cast<std::size_t>(row)] = model.conditional ? static_cast<int>(k) : 0;
    }
  }
  return pool;
}

SyntheticPool pseudo_label(const SyntheticPool& pool, const MlpClassifier& classifier) {
  if (pool.samples.dim() != classifier.input_dim()) {
    throw ConfigError("pseudo_label: pool dimension " + std::to_string(pool.samples.dim()) +
                      " does not match classifier input " +
                      std::to_string(classifier.input_dim()));
  }
  SyntheticPool out = pool;
  out.samples.num_classes = classifier.num_classes();
  out.samples.labels = predict(classifier, pool.samples.features);
  out.provenance.pseudo_labeled = true;
  return out;
}

ClassGaussianModel degrade(const ClassGaussianModel& model, double q, std::uint64_t jitter_seed,
                           double shift_scale) {
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("degrade: q must lie in (0, 1]");
  if (q == 1.0) return model;
  ClassGaussianModel out = model;
  out.quality = model.quality * q;
  Rng rng = make_rng(jitter_seed, "degrade_direction");
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = model.dim();
  for (auto& c : out.components) {
    Vector u(d);
    for (int j = 0; j < d; ++j) u[j] = normal(rng);
    u.normalize();
    c.mean += (1.0 - q) * shift_scale * u;
    const double iso = c.covariance.trace() / double(d);
    c.covariance = q * c.covariance + (1.0 - q) * iso * Matrix::Identity(d, d);
  }
  return out;
}

Matrix symmetric_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const Gaussian& a, const Gaussian& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != a.mean.size() ||
      b.covariance.rows() != b.mean.size()) {
    throw ConfigError("frechet_distance: dimension mismatch");
  }
  check_covariance(a.covariance, "first");
  check_covariance(b.covariance, "second");
  const Matrix root_a = symmetric_sqrt(a.covariance);
  Matrix inner = root_a * b.covariance * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inner, Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value =
      (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

double set_frechet(const LabeledSet& a, const LabeledSet& b) {
  if (a.size() < 2 || b.size() < 2) throw FitError("frechet: need at least 2 samples per set");
  if (a.dim() != b.dim()) throw ConfigError("frechet: dimension mismatch");
  const double ridge = default_ridge(b);
  return frechet_distance(fit_gaussian(a.features, ridge), fit_gaussian(b.features, ridge));
}

double pool_frechet(const SyntheticPool& pool, const LabeledSet& real) {
  return set_frechet(pool.samples, real);
}

void save_model(const ClassGaussianModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << serialize(model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ClassGaussianModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path.string());
  const std::string where = path.string();
  std::size_t line_no = 0;
  auto next_tokens = [&]() {
    std::string line;
    if (!std::getline(in, line)) {
      throw ParseError(where + ":" + std::to_string(line_no + 1) + ": unexpected end of file");
    }
    ++line_no;
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
  };
  auto numbers = [&](std::size_t expected) {
    auto toks = next_tokens();
    if (toks.size() != expected) {
      throw ParseError(where + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(expected) + " values");
    }
    std::vector<double> v;
    for (const auto& t : toks) v.push_back(parse_double(t));
    return v;
  };

  auto header = next_tokens();
  if (header.size() != 4 || header[0] != "classgauss" || header[1] != "v1") {
    throw ParseError(where + ":1: expected header 'classgauss v1 K d'");
  }
  const auto k = parse_int(header[2]);
  const auto d = parse_int(header[3]);
  if (k < 1 || d < 1) throw ParseError(where + ":1: K and d must be >= 1");

  ClassGaussianModel model;
  for (long long c = 0; c < k; ++c) {
    Gaussian g;
    auto m = numbers(static_cast<std::size_t>(d));
    g.mean = Eigen::Map<Vector>(m.data(), d);
    g.covariance.resize(d, d);
    for (long long r = 0; r < d; ++r) {
      auto row = numbers(static_cast<std::size_t>(d));
      for (long long j = 0; j < d; ++j) g.covariance(r, j) = row[static_cast<std::size_t>(j)];
    }
    model.components.push_back(std::move(g));
  }
  model.num_classes = static_cast<int>(k);
  std::string line;
  if (std::getline(in, line) && !trim(line).empty()) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag, ridge, cond, classes, quality;
    if (!(ss >> tag >> ridge >> cond >> classes >> quality) || tag != "meta") {
      throw ParseError(where + ":" + std::to_string(line_no) + ": malformed meta line");
    }
    model.ridge = parse_double(ridge);
    model.conditional = parse_int(cond) != 0;
    model.num_classes = static_cast<int>(parse_int(classes));
    model.quality = parse_double(quality);
  }
  return model;
}

}  // namespace sio
