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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "sio/nnet.hpp"

using namespace sio;
namespace fs = std::filesystem;

TEST_SUITE("nnet") {

TEST_CASE("init") {
  SUBCASE("zero biases") {
    const auto m = MlpClassifier::init({2, 3}, 5);
    CHECK(m.layers()[0].bias == Vector::Zero(3));
  }
  SUBCASE("deterministic per seed") {
    CHECK(MlpClassifier::init({4, 8, 3}, 1) == MlpClassifier::init({4, 8, 3}, 1));
    CHECK_FALSE(MlpClassifier::init({4, 8, 3}, 1) == MlpClassifier::init({4, 8, 3}, 2));
  }
  SUBCASE("weight variance is 2 / fan_in") {
    const auto m = MlpClassifier::init({100, 100}, 3);
    const auto& w = m.layers()[0].weight;
    const double mean = w.mean();
    const double var = (w.array() - mean).square().sum() / double(w.size() - 1);
    CHECK(std::abs(var - 0.02) / 0.02 < 0.05);
  }
  SUBCASE("bad dims") {
    CHECK_THROWS_AS(MlpClassifier::init({}, 0), ConfigError);
    CHECK_THROWS_AS(MlpClassifier::init({3}, 0), ConfigError);
    CHECK_THROWS_AS(MlpClassifier::init({3, 0, 2}, 0), ConfigError);
  }
}

TEST_CASE("forward") {
  SUBCASE("zero model gives zero logits") {
    MlpClassifier m({3, 4});
    CHECK(m.forward(Vector::Ones(3)).logits == Vector::Zero(4));
  }
  SUBCASE("identity layer passes input through") {
    MlpClassifier m({3, 3});
    m.layers()[0].weight.setIdentity();
    const Vector x = (Vector(3) << 1.5, -2, 0.25).finished();
    CHECK(m.forward(x).logits == x);
    CHECK(m.forward(x).penultimate == x);
  }
  SUBCASE("matches the matrix-arithmetic oracle") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    for (int t = 0; t < 20; ++t) {
      auto m = MlpClassifier::init({5, 7, 6, 3}, t);
      for (auto& l : m.layers())
        for (auto& b : l.bias) b = n(rng);
      const auto layers = oracle::copy_layers(m);
      Vector x(5);
      for (auto& v : x) v = n(rng);
      oracle::Vec pen;
      const auto z = oracle::forward(layers, oracle::Vec(x.data(), x.data() + 5), &pen);
      const auto r = m.forward(x);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(r.logits[k] - z[k]) < 1e-12);
      for (int k = 0; k < 6; ++k) CHECK(std::abs(r.penultimate[k] - pen[k]) < 1e-12);
      const auto b = m.forward_batch(x.transpose());
      CHECK((b.logits.row(0).transpose() - r.logits).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((m.head(r.penultimate) - r.logits).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("dimension mismatch") {
    MlpClassifier m({3, 2});
    CHECK_THROWS_AS(m.forward(Vector::Zero(4)), ConfigError);
  }
}

TEST_CASE("loss values") {
  MlpClassifier m({2, 3});
  LabeledSet batch;
  batch.num_classes = 3;
  batch.features = Matrix::Zero(2, 2);
  batch.labels = {0, 2};
  SUBCASE("uniform softmax gives ln K") {
    CHECK(compute_loss(m, batch, CrossEntropy{}).value == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  }
  SUBCASE("one-hot softmax gives zero loss") {
    batch.labels = {0, 0};
    m.layers()[0].bias << 800, 0, 0;
    CHECK(compute_loss(m, batch, CrossEntropy{}).value == 0.0);
  }
  SUBCASE("OE with lambda zero reduces to CE") {
    auto f = gradcheck::make_fixture(3);
    const auto ce = compute_loss(f.model, f.batch, CrossEntropy{});
    const auto oe = compute_loss(f.model, f.batch, OutlierExposure{0.0}, &f.outliers);
    CHECK(oe.value == ce.value);
    for (std::size_t l = 0; l < ce.gradients.size(); ++l) {
      CHECK(oe.gradients[l].weight == ce.gradients[l].weight);
      CHECK(oe.gradients[l].bias == ce.gradients[l].bias);
    }
  }
  SUBCASE("OE value is CE plus lambda times the uniform-target term") {
    auto f = gradcheck::make_fixture(4);
    const auto layers = oracle::copy_layers(f.model);
    double ce = 0.0, u = 0.0;
    for (Eigen::Index i = 0; i < f.batch.size(); ++i) {
      const auto z = oracle::forward(layers, {f.batch.features(i, 0), f.batch.features(i, 1)});
      ce += double(oracle::lse_ld(z)) - z[f.batch.labels[i]];
    }
    for (Eigen::Index i = 0; i < f.outliers.rows(); ++i) {
      const auto z = oracle::forward(layers, {f.outliers(i, 0), f.outliers(i, 1)});
      u += double(oracle::lse_ld(z)) - (z[0] + z[1] + z[2]) / 3.0;
    }
    const double expect = ce / double(f.batch.size()) + 0.7 * u / double(f.outliers.rows());
    CHECK(compute_loss(f.model, f.batch, OutlierExposure{0.7}, &f.outliers).value ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("OE without outliers is rejected") {
    CHECK_THROWS_AS(compute_loss(m, batch, OutlierExposure{}), ConfigError);
  }
  SUBCASE("LogitNorm is invariant to scaling a sample's logits") {
    MlpClassifier lin({2, 3});
    lin.layers()[0].weight << 1, 0, 0, 1, -1, 1;
    lin.layers()[0].bias << 0.2, -0.1, 0.3;
    batch.features << 0.5, -1.0, 2.0, 0.25;
    const double base = compute_loss(lin, batch, LogitNorm{0.04}).value;
    for (double c : {0.5, 3.0, 40.0}) {
      MlpClassifier scaled = lin;
      scaled.layers()[0].weight *= c;
      scaled.layers()[0].bias *= c;
      CHECK(compute_loss(scaled, batch, LogitNorm{0.04}).value == doctest::Approx(base).epsilon(1e-9));
    }
  }
  SUBCASE("LogitNorm survives all-zero logits") {
    const auto r = compute_loss(m, batch, LogitNorm{0.04});
    CHECK(std::isfinite(r.value));
    CHECK(r.value == doctest::Approx(std::log(3.0)));
  }
  SUBCASE("invalid modes") {
    CHECK_THROWS_AS(validate_loss_mode(OutlierExposure{-1.0}), ConfigError);
    CHECK_THROWS_AS(validate_loss_mode(LogitNorm{0.0}), ConfigError);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = gradcheck::make_fixture(seed);
    CHECK(gradcheck::loss_gradient_error(f, CrossEntropy{}) < 1e-4);
    CHECK(gradcheck::loss_gradient_error(f, OutlierExposure{0.5}) < 1e-4);
    CHECK(gradcheck::loss_gradient_error(f, LogitNorm{0.04}) < 1e-4);
    for (Eigen::Index i = 0; i < f.batch.size(); ++i)
      CHECK(gradcheck::input_gradient_error(f.model, f.batch.features.row(i).transpose()) < 1e-4);
  }
}

TEST_CASE("input gradient special cases") {
  SUBCASE("uniform softmax of a symmetric linear model") {
    MlpClassifier m({2, 3});
    m.layers()[0].weight << 1, 2, 1, 2, 1, 2;
    CHECK(input_gradient(m, (Vector(2) << 0.3, -1.2).finished()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("input-independent model") {
    MlpClassifier m({3, 4, 2});
    m.layers()[1].bias << 1, -1;
    CHECK(input_gradient(m, Vector::Ones(3)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 0.1) == 0.1);
  CHECK(cosine_lr(100, 100, 0.1) == doctest::Approx(0.0));
  CHECK(cosine_lr(50, 100, 0.1) == doctest::Approx(0.05).epsilon(1e-15));
  double prev = 1.0;
  for (long s = 0; s <= 37; ++s) {
    const double lr = cosine_lr(s, 37, 1.0);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK_THROWS(cosine_lr(101, 100, 0.1));
}

TEST_CASE("sgd step") {
  MlpClassifier m({1, 1});
  m.layers()[0].weight(0, 0) = 2.0;
  m.layers()[0].bias(0) = -1.0;
  auto grads = zeros_like(m.layers());
  SUBCASE("zero gradient and zero decay leave parameters alone") {
    auto st = OptimState::for_model(m, 0.1, 10);
    st.weight_decay = 0.0;
    const auto before = m;
    sgd_step(m, grads, st);
    CHECK(m == before);
    CHECK(st.step == 1);
  }
  SUBCASE("first Nesterov step scales by 1 + mu") {
    auto st = OptimState::for_model(m, 0.1, 10);
    st.weight_decay = 0.01;
    grads[0].weight(0, 0) = 0.5;
    const double gp = 0.5 + 0.01 * 2.0;
    sgd_step(m, grads, st);
    CHECK(m.layers()[0].weight(0, 0) == doctest::Approx(2.0 - 0.1 * 1.9 * gp).epsilon(1e-15));
  }
  SUBCASE("three steps follow the scalar recurrence") {
    for (bool nesterov : {true, false}) {
      MlpClassifier mm = m;
      auto st = OptimState::for_model(mm, 0.2, 5);
      st.nesterov = nesterov;
      st.weight_decay = 0.05;
      st.momentum = 0.9;
      double p = 2.0, v = 0.0;
      const double g[3] = {0.4, -0.3, 0.25};
      for (int k = 0; k < 3; ++k) {
        auto gr = zeros_like(mm.layers());
        gr[0].weight(0, 0) = g[k];
        sgd_step(mm, gr, st);
        const double lr = 0.2 * 0.5 * (1 + std::cos(M_PI * k / 5.0));
        const double gp = g[k] + 0.05 * p;
        v = 0.9 * v + gp;
        p -= nesterov ? lr * (gp + 0.9 * v) : lr * v;
      }
      CHECK(mm.layers()[0].weight(0, 0) == doctest::Approx(p).epsilon(1e-14));
    }
  }
  SUBCASE("stepping past the schedule is an error") {
    auto st = OptimState::for_model(m, 0.1, 1);
    sgd_step(m, grads, st);
    CHECK_THROWS(sgd_step(m, grads, st));
  }
}

TEST_CASE("checkpoint round trip and predict") {
  const auto m = MlpClassifier::init({4, 5, 3}, 9);
  const fs::path dir = fs::temp_directory_path() / "sio_lab_tests";
  fs::create_directories(dir);
  save_checkpoint(m, dir / "model.txt");
  CHECK(load_checkpoint(dir / "model.txt") == m);
  std::ofstream(dir / "bad_model.txt") << "mlp v2\n";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad_model.txt"), ParseError);

  Matrix x = Matrix::Random(10, 4);
  const auto pred = predict(m, x);
  for (int i = 0; i < 10; ++i) CHECK(pred[i] == argmax(m.forward(x.row(i).transpose()).logits));
}

}
