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

#include "sio/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sio {

namespace {
struct MethodName {
  ScoreMethod method;
  const char* name;
};
constexpr MethodName kMethodNames[] = {
    {ScoreMethod::Msp, "msp"},     {ScoreMethod::TempScale, "tempscale"},
    {ScoreMethod::Odin, "odin"},   {ScoreMethod::Energy, "energy"},
    {ScoreMethod::Mls, "mls"},     {ScoreMethod::Klm, "klm"},
    {ScoreMethod::React, "react"}, {ScoreMethod::Knn, "knn"},
    {ScoreMethod::Dice, "dice"},   {ScoreMethod::GradNorm, "gradnorm"},
    {ScoreMethod::Vim, "vim"},
};

void require_temperature(double t) {
  if (!(t > 0.0)) throw ConfigError("temperature must be > 0");
}
}  // namespace

std::string method_name(ScoreMethod m) {
  for (const auto& e : kMethodNames) {
    if (e.method == m) return e.name;
  }
  return "unknown";
}

ScoreMethod parse_method(const std::string& name) {
  if (name == "ebo") return ScoreMethod::Energy;
  for (const auto& e : kMethodNames) {
    if (name == e.name) return e.method;
  }
  throw ConfigError("unknown scorer '" + name + "'");
}

std::vector<ScoreMethod> all_methods() {
  std::vector<ScoreMethod> out;
  for (const auto& e : kMethodNames) out.push_back(e.method);
  return out;
}

double score_msp(const Vector& logits, double temperature) {
  require_temperature(temperature);
  return -softmax(logits / temperature).maxCoeff();
}

double score_mls(const Vector& logits) { return -logits.maxCoeff(); }

double score_energy(const Vector& logits, double temperature) {
  require_temperature(temperature);
  return -temperature * log_sum_exp(logits / temperature);
}

double score_odin(const MlpClassifier& model, const Vector& x, double temperature, double eps) {
  require_temperature(temperature);
  if (!(eps >= 0.0)) throw ConfigError("ODIN eps must be >= 0");
  if (eps == 0.0) return score_msp(model.forward(x).logits, temperature);
  const Vector g = input_gradient(model, x);
  const Vector step = g.unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
  return score_msp(model.forward(x - eps * step).logits, temperature);
}

double fit_react(const Matrix& id_features, double percentile) {
  if (id_features.size() == 0) throw FitError("react: empty feature matrix");
  if (!(percentile > 0.0 && percentile <= 100.0)) {
    throw ConfigError("react: percentile must lie in (0, 100]");
  }
  std::vector<double> v(id_features.data(), id_features.data() + id_features.size());
  std::sort(v.begin(), v.end());
  const double pos = percentile / 100.0 * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - double(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

Vector clip_features(const Vector& feature, double threshold) {
  return feature.cwiseMin(threshold);
}

double score_react_features(const MlpClassifier& model, const Vector& feature, double threshold) {
  return score_energy(model.head(clip_features(feature, threshold)), 1.0);
}

double score_react(const MlpClassifier& model, const Vector& x, double threshold) {
  return score_react_features(model, model.forward(x).penultimate, threshold);
}

namespace {
Vector unit(const Vector& v) { return v / std::max(v.norm(), 1e-12); }
}  // namespace

KnnIndex fit_knn(const Matrix& id_features, int k, bool normalize) {
  if (k < 1) throw ConfigError("knn: k must be >= 1");
  if (k > id_features.rows()) {
    throw ConfigError("knn: k=" + std::to_string(k) + " exceeds index size " +
                      std::to_string(id_features.rows()));
  }
  KnnIndex index{id_features, k, normalize};
  if (normalize) {
    for (Eigen::Index i = 0; i < index.points.rows(); ++i) {
      index.points.row(i) = unit(index.points.row(i).transpose()).transpose();
    }
  }
  return index;
}

double score_knn(const Vector& feature, const KnnIndex& index) {
  const Vector q = index.normalize ? unit(feature) : feature;
  std::vector<double> d2(static_cast<std::size_t>(index.points.rows()));
  for (Eigen::Index i = 0; i < index.points.rows(); ++i) {
    d2[static_cast<std::size_t>(i)] = (index.points.row(i).transpose() - q).squaredNorm();
  }
  auto kth = d2.begin() + (index.k - 1);
  std::nth_element(d2.begin(), kth, d2.end());
  return std::sqrt(*kth);
}

DiceMask fit_dice(const Matrix& id_features, const Matrix& weight, double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw ConfigError("dice: p must lie in [0, 100]");
  if (id_features.rows() == 0) throw FitError("dice: empty feature matrix");
  if (id_features.cols() != weight.cols()) throw ConfigError("dice: feature/weight shape mismatch");
  const Vector mean_feature = id_features.colwise().mean().transpose();
  const Matrix contribution = weight.array().rowwise() * mean_feature.transpose().array();
  const Eigen::Index h = weight.cols();
  const auto keep = static_cast<Eigen::Index>(round_half_away(percent / 100.0 * double(h)));

  DiceMask mask;
  mask.percent = percent;
  mask.keep.setConstant(weight.rows(), h, false);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(h));
  for (Eigen::Index r = 0; r < weight.rows(); ++r) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return contribution(r, a) > contribution(r, b);
    });
    for (Eigen::Index j = 0; j < keep; ++j) mask.keep(r, order[static_cast<std::size_t>(j)]) = true;
  }
  return mask;
}

double score_dice(const Vector& feature, const Matrix& weight, const Vector& bias,
                  const DiceMask& mask) {
  if (mask.keep.rows() != weight.rows() || mask.keep.cols() != weight.cols()) {
    throw ConfigError("dice: mask shape does not match weights");
  }
  const Matrix masked = mask.keep.select(weight, 0.0);
  return score_energy(masked * feature + bias, 1.0);
}

KlmTemplates fit_klm(const Matrix& id_probs, const std::vector<int>& labels, int num_classes) {
  if (static_cast<std::size_t>(id_probs.rows()) != labels.size()) {
    throw ConfigError("klm: label count does not match probability rows");
  }
  KlmTemplates t;
  t.templates = Matrix::Zero(num_classes, id_probs.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t.templates.row(labels[i]) += id_probs.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (int k = 0; k < num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw FitError("klm: class " + std::to_string(k) + " has no fit samples");
    }
    t.templates.row(k) /= double(counts[static_cast<std::size_t>(k)]);
  }
  return t;
}

double kl_divergence(const Vector& p, const Vector& q) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

double score_klm(const Vector& probs, const KlmTemplates& templates) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < templates.templates.rows(); ++k) {
    Vector t = templates.templates.row(k).transpose().cwiseMax(1e-12);
    t /= t.sum();
    best = std::min(best, kl_divergence(probs, t));
  }
  return best;
}

double gradnorm_from(const Vector& probs, const Vector& feature) {
  const double uniform = 1.0 / double(probs.size());
  return -(probs.array() - uniform).abs().sum() * feature.cwiseAbs().sum();
}

double score_gradnorm(const MlpClassifier& model, const Vector& x) {
  const auto out = model.forward(x);
  return gradnorm_from(softmax(out.logits), out.penultimate);
}

VimParams fit_vim(const Matrix& id_features, const Matrix& id_logits,
                  std::optional<int> subspace_dim) {
  const auto h = static_cast<int>(id_features.cols());
  const int dim = subspace_dim.value_or(std::min((h + 1) / 2, h - 1));
  if (dim < 0 || dim >= h) {
    throw ConfigError("vim: subspace dimension must lie in [0, " + std::to_string(h) + ")");
  }
  if (id_features.rows() < 2) throw FitError("vim: need at least 2 fit samples");
  if (id_logits.rows() != id_features.rows()) throw ConfigError("vim: logits/features mismatch");

  VimParams params;
  params.center = id_features.colwise().mean().transpose();
  const Matrix centered = id_features.rowwise() - params.center.transpose();
  const Matrix cov = centered.transpose() * centered / double(id_features.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  // Eigenvalues ascend; keep the trailing columns, largest first.
  params.basis.resize(h, dim);
  for (int j = 0; j < dim; ++j) params.basis.col(j) = eig.eigenvectors().col(h - 1 - j);

  double residual_sum = 0.0;
  for (Eigen::Index i = 0; i < id_features.rows(); ++i) {
    residual_sum += vim_residual(id_features.row(i).transpose(), params);
  }
  if (!(residual_sum > 1e-12 * double(id_features.rows()))) {
    throw FitError("vim: degenerate residuals");
  }
  params.alpha = id_logits.rowwise().maxCoeff().sum() / residual_sum;
  return params;
}

double vim_residual(const Vector& feature, const VimParams& params) {
  const Vector c = feature - params.center;
  return (c - params.basis * (params.basis.transpose() * c)).norm();
}

double score_vim(const Vector& feature, const Vector& logits, const VimParams& params) {
  return params.alpha * vim_residual(feature, params) - log_sum_exp(logits);
}

Verdict detect(double score, const DetectorConfig& config) {
  return score >= config.threshold ? Verdict::Ood : Verdict::Id;
}

namespace {
template <typename F>
auto with_scorer(ScoreMethod m, F&& f) {
  try {
    return f();
  } catch (const FitError& e) {
    throw FitError(method_name(m) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(method_name(m) + ": " + e.what());
  }
}

bool needs(const std::vector<ScoreMethod>& methods, ScoreMethod m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}
}  // namespace

FitStats fit_scorers(const MlpClassifier& model, const LabeledSet& id_fit,
                     const std::vector<ScoreMethod>& methods, const ScorerParams& params) {
  FitStats stats;
  if (id_fit.empty()) throw FitError("scorer fit: empty ID fit set");
  const BatchForward fwd = model.forward_batch(id_fit.features);
  if (needs(methods, ScoreMethod::React)) {
    stats.react_threshold = with_scorer(ScoreMethod::React, [&] {
      return fit_react(fwd.penultimate, params.react_percentile);
    });
  }
  if (needs(methods, ScoreMethod::Knn)) {
    stats.knn = with_scorer(ScoreMethod::Knn, [&] {
      const int k = std::min<int>(params.knn_k, static_cast<int>(fwd.penultimate.rows()));
      return fit_knn(fwd.penultimate, k, params.knn_normalize);
    });
  }
  if (needs(methods, ScoreMethod::Dice)) {
    stats.dice = with_scorer(ScoreMethod::Dice, [&] {
      return fit_dice(fwd.penultimate, model.last_layer().weight, params.dice_percent);
    });
  }
  if (needs(methods, ScoreMethod::Klm)) {
    stats.klm = with_scorer(ScoreMethod::Klm, [&] {
      Matrix probs(fwd.logits.rows(), fwd.logits.cols());
      for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        probs.row(i) = softmax(fwd.logits.row(i).transpose()).transpose();
      }
      return fit_klm(probs, id_fit.labels, model.num_classes());
    });
  }
  if (needs(methods, ScoreMethod::Vim)) {
    stats.vim = with_scorer(ScoreMethod::Vim, [&] {
      return fit_vim(fwd.penultimate, fwd.logits, params.vim_dim);
    });
  }
  if (needs(methods, ScoreMethod::Odin)) {
    if (params.odin_eps) {
      stats.odin_eps = *params.odin_eps;
    } else {
      const Matrix centered = id_fit.features.rowwise() - id_fit.features.colwise().mean();
      const Vector stdev =
          (centered.array().square().colwise().sum() / double(id_fit.size())).sqrt().transpose();
      stats.odin_eps = 0.0014 * stdev.mean();
    }
  }
  return stats;
}

namespace {

// Exact k-th neighbour distances for many queries; squared distances come
// from one matrix product and are clamped at zero.
std::vector<double> knn_batch(const Matrix& features, const KnnIndex& index) {
  Matrix q = features;
  if (index.normalize) {
    for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) = unit(q.row(i).transpose()).transpose();
  }
  const Vector q_sq = q.rowwise().squaredNorm();
  const Vector p_sq = index.points.rowwise().squaredNorm();
  const Matrix cross = q * index.points.transpose();
  std::vector<double> out(static_cast<std::size_t>(q.rows()));
  std::vector<double> row(static_cast<std::size_t>(index.points.rows()));
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < index.points.rows(); ++j) {
      row[static_cast<std::size_t>(j)] = std::max(q_sq[i] + p_sq[j] - 2.0 * cross(i, j), 0.0);
    }
    auto kth = row.begin() + (index.k - 1);
    std::nth_element(row.begin(), kth, row.end());
    out[static_cast<std::size_t>(i)] = std::sqrt(*kth);
  }
  return out;
}

}  // namespace

std::vector<double> score_batch(ScoreMethod method, const MlpClassifier& model,
                                const FitStats& stats, const ScorerParams& params,
                                const Matrix& x) {
  const BatchForward fwd = model.forward_batch(x);
  if (method == ScoreMethod::Knn) {
    if (!stats.knn) throw FitError("knn: fit statistics missing");
    return knn_batch(fwd.penultimate, *stats.knn);
  }
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  auto missing = [&]() {
    return FitError(method_name(method) + ": fit statistics missing");
  };
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector logits = fwd.logits.row(i).transpose();
    const Vector feature = fwd.penultimate.row(i).transpose();
    double s = 0.0;
    switch (method) {
      case ScoreMethod::Msp: s = score_msp(logits, 1.0); break;
      case ScoreMethod::TempScale: s = score_msp(logits, params.temp_scale_t); break;
      case ScoreMethod::Energy: s = score_energy(logits, params.energy_t); break;
      case ScoreMethod::Mls: s = score_mls(logits); break;
      case ScoreMethod::Odin:
        if (!stats.odin_eps) throw missing();
        s = score_odin(model, x.row(i).transpose(), params.odin_t, *stats.odin_eps);
        break;
      case ScoreMethod::React:
        if (!stats.react_threshold) throw missing();
        s = score_react_features(model, feature, *stats.react_threshold);
        break;
      case ScoreMethod::Knn:
        if (!stats.knn) throw missing();
        s = score_knn(feature, *stats.knn);
        break;
      case ScoreMethod::Dice:
        if (!stats.dice) throw missing();
        s = score_dice(feature, model.last_layer().weight, model.last_layer().bias, *stats.dice);
        break;
      case ScoreMethod::Klm:
        if (!stats.klm) throw missing();
        s = score_klm(softmax(logits), *stats.klm);
        break;
      case ScoreMethod::GradNorm: s = gradnorm_from(softmax(logits), feature); break;
      case ScoreMethod::Vim:
        if (!stats.vim) throw missing();
        s = score_vim(feature, logits, *stats.vim);
        break;
    }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

namespace {
void write_row(std::ostream& out, const auto& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) out << (j ? " " : "") << format_double(row[j]);
  out << '\n';
}
}  // namespace

void save_fit_stats(const FitStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "fitstats v1\n";
  if (stats.react_threshold) out << "react " << format_double(*stats.react_threshold) << '\n';
  if (stats.odin_eps) out << "odin " << format_double(*stats.odin_eps) << '\n';
  if (stats.knn) {
    const auto& p = stats.knn->points;
    out << "knn " << stats.knn->k << ' ' << (stats.knn->normalize ? 1 : 0) << ' ' << p.rows()
        << ' ' << p.cols() << '\n';
    for (Eigen::Index i = 0; i < p.rows(); ++i) write_row(out, Vector(p.row(i).transpose()));
  }
  if (stats.dice) {
    const auto& m = stats.dice->keep;
    out << "dice " << format_double(stats.dice->percent) << ' ' << m.rows() << ' ' << m.cols()
        << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << (m(i, j) ? 1 : 0);
      out << '\n';
    }
  }
  if (stats.klm) {
    const auto& t = stats.klm->templates;
    out << "klm " << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index i = 0; i < t.rows(); ++i) write_row(out, Vector(t.row(i).transpose()));
  }
  if (stats.vim) {
    const auto& v = *stats.vim;
    out << "vim " << v.basis.rows() << ' ' << v.basis.cols() << ' ' << format_double(v.alpha)
        << '\n';
    write_row(out, v.center);
    for (Eigen::Index i = 0; i < v.basis.rows(); ++i) write_row(out, Vector(v.basis.row(i).transpose()));
  }
  out << "end\n";
}

FitStats load_fit_stats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path.string());
  const std::string where = path.string();
  std::size_t line_no = 0;
  auto tokens = [&]() {
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
  auto numbers = [&](long long expected) {
    auto toks = tokens();
    if (static_cast<long long>(toks.size()) != expected) {
      throw ParseError(where + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(expected) + " values");
    }
    Vector v(expected);
    for (long long j = 0; j < expected; ++j) v[j] = parse_double(toks[static_cast<std::size_t>(j)]);
    return v;
  };
  auto bad = [&](const std::string& msg) {
    return ParseError(where + ":" + std::to_string(line_no) + ": " + msg);
  };

  auto header = tokens();
  if (header.size() != 2 || header[0] != "fitstats" || header[1] != "v1") {
    throw bad("expected header 'fitstats v1'");
  }
  FitStats stats;
  while (true) {
    auto t = tokens();
    if (t.empty()) continue;
    const auto& tag = t[0];
    if (tag == "end") break;
    if (tag == "react" && t.size() == 2) {
      stats.react_threshold = parse_double(t[1]);
    } else if (tag == "odin" && t.size() == 2) {
      stats.odin_eps = parse_double(t[1]);
    } else if (tag == "knn" && t.size() == 5) {
      KnnIndex idx;
      idx.k = static_cast<int>(parse_int(t[1]));
      idx.normalize = parse_int(t[2]) != 0;
      const auto rows = parse_int(t[3]), cols = parse_int(t[4]);
      idx.points.resize(rows, cols);
      for (long long i = 0; i < rows; ++i) idx.points.row(i) = numbers(cols).transpose();
      stats.knn = std::move(idx);
    } else if (tag == "dice" && t.size() == 4) {
      DiceMask m;
      m.percent = parse_double(t[1]);
      const auto rows = parse_int(t[2]), cols = parse_int(t[3]);
      m.keep.resize(rows, cols);
      for (long long i = 0; i < rows; ++i) {
        const Vector r = numbers(cols);
        for (long long j = 0; j < cols; ++j) m.keep(i, j) = r[j] != 0.0;
      }
      stats.dice = std::move(m);
    } else if (tag == "klm" && t.size() == 3) {
      KlmTemplates k;
      const auto rows = parse_int(t[1]), cols = parse_int(t[2]);
      k.templates.resize(rows, cols);
      for (long long i = 0; i < rows; ++i) k.templates.row(i) = numbers(cols).transpose();
      stats.klm = std::move(k);
    } else if (tag == "vim" && t.size() == 4) {
      VimParams v;
      const auto h = parse_int(t[1]), dim = parse_int(t[2]);
      v.alpha = parse_double(t[3]);
      v.center = numbers(h);
      v.basis.resize(h, dim);
      for (long long i = 0; i < h; ++i) v.basis.row(i) = numbers(dim).transpose();
      stats.vim = std::move(v);
    } else {
      throw bad("unknown or malformed block '" + tag + "'");
    }
  }
  return stats;
}

void save_score_dump(const std::vector<ScoreDumpRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "sample_id,split,method,score\n";
  for (const auto& r : rows) {
    out << r.sample_id << ',' << r.split << ',' << r.method << ',' << format_double(r.score) << '\n';
  }
}

}  // namespace sio
