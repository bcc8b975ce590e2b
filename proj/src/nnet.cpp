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

#include "sio/nnet.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sio {

MlpClassifier::MlpClassifier(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ConfigError("MlpClassifier: need at least 2 layer dims");
  for (int d : dims_) {
    if (d < 1) throw ConfigError("MlpClassifier: every layer dim must be >= 1");
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    layers_.push_back({Matrix::Zero(dims_[l + 1], dims_[l]), Vector::Zero(dims_[l + 1])});
  }
}

MlpClassifier MlpClassifier::init(const std::vector<int>& layer_dims, std::uint64_t seed) {
  MlpClassifier model(layer_dims);
  Rng rng = make_rng(seed, "mlp_init");
  for (auto& layer : model.layers_) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / double(layer.weight.cols())));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = normal(rng);
    }
  }
  return model;
}

namespace {

struct Trace {
  std::vector<Matrix> pre;  // per layer, n x out
  std::vector<Matrix> act;  // act[0] = input; act[l + 1] = relu(pre[l]) for hidden layers
};

Trace forward_trace(const LayerStack& layers, const Matrix& x) {
  Trace t;
  t.act.push_back(x);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = t.act.back() * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    t.pre.push_back(z);
    if (l + 1 < layers.size()) t.act.push_back(z.cwiseMax(0.0));
  }
  return t;
}

LayerStack backward(const LayerStack& layers, const Trace& t, Matrix dz) {
  LayerStack grads(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weight = dz.transpose() * t.act[l];
    grads[l].bias = dz.colwise().sum().transpose();
    if (l == 0) break;
    Matrix da = dz * layers[l].weight;
    dz = (t.pre[l - 1].array() > 0.0).select(da, 0.0);
  }
  return grads;
}

Matrix softmax_rows(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) p.row(i) = softmax(z.row(i).transpose()).transpose();
  return p;
}

void check_input(const MlpClassifier& model, Eigen::Index cols) {
  if (cols != model.input_dim()) {
    throw ConfigError("input dimension " + std::to_string(cols) + " does not match model input " +
                      std::to_string(model.input_dim()));
  }
}

}  // namespace

ForwardResult MlpClassifier::forward(const Vector& x) const {
  check_input(*this, x.size());
  Vector a = x;
  ForwardResult out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector z = layers_[l].weight * a + layers_[l].bias;
    if (l + 1 == layers_.size()) {
      out.penultimate = std::move(a);
      out.logits = std::move(z);
    } else {
      a = z.cwiseMax(0.0);
    }
  }
  return out;
}

BatchForward MlpClassifier::forward_batch(const Matrix& x) const {
  check_input(*this, x.cols());
  Trace t = forward_trace(layers_, x);
  return {std::move(t.pre.back()), std::move(t.act.back())};
}

Vector MlpClassifier::head(const Vector& penultimate) const {
  return last_layer().weight * penultimate + last_layer().bias;
}

bool MlpClassifier::operator==(const MlpClassifier& other) const {
  if (dims_ != other.dims_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight || layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

LayerStack zeros_like(const LayerStack& params) {
  LayerStack out;
  for (const auto& p : params) {
    out.push_back({Matrix::Zero(p.weight.rows(), p.weight.cols()), Vector::Zero(p.bias.size())});
  }
  return out;
}

std::string loss_mode_name(const LossMode& mode) {
  if (std::holds_alternative<CrossEntropy>(mode)) return "ce";
  if (std::holds_alternative<OutlierExposure>(mode)) return "oe";
  return "logitnorm";
}

void validate_loss_mode(const LossMode& mode) {
  if (auto* oe = std::get_if<OutlierExposure>(&mode); oe && !(oe->lambda >= 0.0)) {
    throw ConfigError("OE lambda must be >= 0");
  }
  if (auto* ln = std::get_if<LogitNorm>(&mode); ln && !(ln->tau > 0.0)) {
    throw ConfigError("LogitNorm tau must be > 0");
  }
}

LossResult compute_loss(const MlpClassifier& model, const LabeledSet& batch, const LossMode& mode,
                        const Matrix* outliers) {
  validate_loss_mode(mode);
  if (batch.empty()) throw ConfigError("loss: empty batch");
  check_input(model, batch.dim());
  const auto* oe = std::get_if<OutlierExposure>(&mode);
  if (oe && (outliers == nullptr || outliers->rows() == 0)) {
    throw ConfigError("loss: OE mode requires a nonempty outlier batch");
  }

  const Eigen::Index n = batch.size();
  const int k = model.num_classes();
  const Trace t = forward_trace(model.layers(), batch.features);
  const Matrix& z = t.pre.back();
  Matrix dz(z.rows(), z.cols());
  double value = 0.0;

  if (const auto* ln = std::get_if<LogitNorm>(&mode)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector zi = z.row(i).transpose();
      const double norm = zi.norm();
      const double s = norm + kLogitNormGuard;
      const Vector zt = zi / (ln->tau * s);
      const int y = batch.labels[static_cast<std::size_t>(i)];
      value += log_sum_exp(zt) - zt[y];
      Vector dzt = softmax(zt);
      dzt[y] -= 1.0;
      dzt /= double(n);
      Vector g = dzt / (ln->tau * s);
      if (norm > 0.0) g -= zi * (zi.dot(dzt) / (ln->tau * s * s * norm));
      dz.row(i) = g.transpose();
    }
    return {value / double(n), backward(model.layers(), t, std::move(dz))};
  }

  const Matrix p = softmax_rows(z);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = batch.labels[static_cast<std::size_t>(i)];
    value += log_sum_exp(z.row(i).transpose()) - z(i, y);
    dz.row(i) = p.row(i) / double(n);
    dz(i, y) -= 1.0 / double(n);
  }
  LossResult out{value / double(n), backward(model.layers(), t, std::move(dz))};
  if (!oe) return out;

  // Outliers get their own pass so that lambda = 0 leaves the CE result untouched.
  check_input(model, outliers->cols());
  const Eigen::Index n_out = outliers->rows();
  const Trace to = forward_trace(model.layers(), *outliers);
  const Matrix& zo = to.pre.back();
  Matrix dzo(zo.rows(), zo.cols());
  double uniform_term = 0.0;
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const Vector zi = zo.row(i).transpose();
    uniform_term += log_sum_exp(zi) - zi.mean();
    Vector g = softmax(zi).array() - 1.0 / double(k);
    dzo.row(i) = (oe->lambda / double(n_out)) * g.transpose();
  }
  out.value += oe->lambda * uniform_term / double(n_out);
  const LayerStack go = backward(model.layers(), to, std::move(dzo));
  for (std::size_t l = 0; l < go.size(); ++l) {
    out.gradients[l].weight += go[l].weight;
    out.gradients[l].bias += go[l].bias;
  }
  return out;
}

OptimState OptimState::for_model(const MlpClassifier& model, double lr0, long total_steps) {
  OptimState s;
  s.lr0 = lr0;
  s.total_steps = total_steps;
  s.velocity = zeros_like(model.layers());
  return s;
}

double cosine_lr(long step, long total_steps, double lr0) {
  if (total_steps < 1) throw ConfigError("cosine_lr: total_steps must be >= 1");
  if (step < 0 || step > total_steps) {
    throw ConfigError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                      std::to_string(total_steps) + "]");
  }
  if (step == total_steps) return 0.0;
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * double(step) / double(total_steps)));
}

void sgd_step(MlpClassifier& model, const LayerStack& gradients, OptimState& state) {
  auto& params = model.layers();
  if (gradients.size() != params.size()) throw ConfigError("sgd_step: gradient shape mismatch");
  if (state.velocity.empty()) state.velocity = zeros_like(params);
  if (state.step >= state.total_steps) throw ConfigError("sgd_step: schedule exhausted");
  const double lr = cosine_lr(state.step, state.total_steps, state.lr0);
  const double mu = state.momentum;
  const double wd = state.weight_decay;

  auto update = [&](auto& p, const auto& g, auto& v) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw ConfigError("sgd_step: gradient shape mismatch");
    }
    auto g_eff = (g + wd * p).eval();
    v = mu * v + g_eff;
    if (state.nesterov) {
      p -= lr * (g_eff + mu * v);
    } else {
      p -= lr * v;
    }
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, gradients[l].weight, state.velocity[l].weight);
    update(params[l].bias, gradients[l].bias, state.velocity[l].bias);
  }
  ++state.step;
}

Vector input_gradient(const MlpClassifier& model, const Vector& x) {
  check_input(model, x.size());
  const Matrix xm = x.transpose();
  const Trace t = forward_trace(model.layers(), xm);
  const Vector z = t.pre.back().row(0).transpose();
  Vector dz = softmax(z);
  dz[argmax(z)] -= 1.0;
  const auto& layers = model.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    Vector da = layers[l].weight.transpose() * dz;
    if (l == 0) return da;
    const Vector pre = t.pre[l - 1].row(0).transpose();
    dz = (pre.array() > 0.0).select(da, 0.0);
  }
  return dz;
}

void save_checkpoint(const MlpClassifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "mlp v1\n";
  for (std::size_t i = 0; i < model.dims().size(); ++i) {
    out << (i ? " " : "") << model.dims()[i];
  }
  out << '\n';
  for (const auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        out << (c ? " " : "") << format_double(layer.weight(r, c));
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out << (r ? " " : "") << format_double(layer.bias[r]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {
std::vector<double> read_numbers(std::istream& in, std::size_t expected, std::size_t& line_no,
                                 const std::string& where) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(where + ":" + std::to_string(line_no + 1) + ": unexpected end of file");
  }
  ++line_no;
  std::vector<double> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(tok));
  if (out.size() != expected) {
    throw ParseError(where + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(expected) + " values, got " + std::to_string(out.size()));
  }
  return out;
}
}  // namespace

MlpClassifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || trim(line) != "mlp v1") {
    throw ParseError(where + ":1: expected header 'mlp v1'");
  }
  if (!std::getline(in, line)) throw ParseError(where + ":2: missing layer dims");
  std::vector<int> dims;
  {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) dims.push_back(static_cast<int>(parse_int(tok)));
  }
  MlpClassifier model(dims);
  std::size_t line_no = 2;
  for (auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      auto row = read_numbers(in, static_cast<std::size_t>(layer.weight.cols()), line_no, where);
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = row[c];
    }
    auto b = read_numbers(in, static_cast<std::size_t>(layer.bias.size()), line_no, where);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = b[r];
  }
  return model;
}

std::vector<int> predict(const MlpClassifier& model, const Matrix& x) {
  const auto fwd = model.forward_batch(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax(fwd.logits.row(i).transpose());
  }
  return out;
}

}  // namespace sio
