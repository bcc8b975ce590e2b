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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sio/metrics.hpp"
#include "sio/sio_trainer.hpp"

using namespace sio;

namespace {

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? std::round(u(rng) * 2) / 2 : u(rng);
  return v;
}

/// Exhaustive threshold scan over every distinct score.
double fpr_scan(const std::vector<double>& id, const std::vector<double>& ood, double target) {
  std::vector<double> cand(id);
  cand.insert(cand.end(), ood.begin(), ood.end());
  double best = 1.0;
  for (double t : cand) {
    const double tpr = double(std::count_if(ood.begin(), ood.end(), [&](double s) { return s >= t; })) / double(ood.size());
    if (tpr < target) continue;
    best = std::min(best, double(std::count_if(id.begin(), id.end(), [&](double s) { return s >= t; })) / double(id.size()));
  }
  return best;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("auroc examples") {
  CHECK(auroc(std::vector<double>{0, 1}, std::vector<double>{2, 3}) == 1.0);
  CHECK(auroc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 1}) == 0.5);
  const std::vector<double> id{0.1, 0.4, 0.35, 0.8}, ood{0.9, 0.5, 0.3};
  CHECK(auroc(id, ood) == oracle::auroc_pairs(id, ood));
  CHECK(auroc(id, ood) == doctest::Approx(8.0 / 12.0));
  CHECK_THROWS_AS(auroc(std::vector<double>{}, ood), ConfigError);
  CHECK_THROWS_AS(auroc(id, std::vector<double>{NAN}), std::runtime_error);
}

TEST_CASE("auroc agrees with pair counting, complements and rank invariance") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto id = random_scores(rng, 1 + rng() % 50, t % 2 == 0);
    const auto ood = random_scores(rng, 1 + rng() % 50, t % 2 == 0);
    const double a = auroc(id, ood);
    CHECK(std::abs(a - oracle::auroc_pairs(id, ood)) < 1e-12);
    CHECK(a + auroc(ood, id) == 1.0);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    auto map = [](std::vector<double> v, auto f) {
      for (auto& x : v) x = f(x);
      return v;
    };
    auto ex = [](double x) { return std::exp(x); };
    auto aff = [](double x) { return 3.0 * x + 7.0; };
    auto cube = [](double x) { return x * x * x; };
    CHECK(auroc(map(id, ex), map(ood, ex)) == a);
    CHECK(auroc(map(id, aff), map(ood, aff)) == a);
    CHECK(auroc(map(id, cube), map(ood, cube)) == a);
  }
}

TEST_CASE("fpr at tpr") {
  CHECK(fpr_at_tpr(std::vector<double>{0, 1}, std::vector<double>{2, 3}) == 0.0);
  CHECK(fpr_at_tpr(std::vector<double>{1, 2, 3}, std::vector<double>{0.5}, 1.0) == 1.0);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const auto id = random_scores(rng, 1 + rng() % 60, t % 2 == 0);
    const auto ood = random_scores(rng, 1 + rng() % 60, t % 2 == 0);
    CHECK(fpr_at_tpr(id, ood) == fpr_scan(id, ood, 0.95));
  }
  std::normal_distribution<double> n;
  std::vector<double> a(20000), b(20000);
  for (auto& x : a) x = n(rng);
  for (auto& x : b) x = n(rng);
  CHECK(std::abs(fpr_at_tpr(a, b) - 0.95) < 0.01);
  CHECK_THROWS_AS(fpr_at_tpr(a, std::vector<double>{}), ConfigError);
}

TEST_CASE("accuracy") {
  MlpClassifier m({2, 3});
  m.layers()[0].bias << 1, 0, 0;
  LabeledSet s;
  s.num_classes = 3;
  s.features = Matrix::Random(5, 2);
  s.labels.assign(5, 0);
  CHECK(accuracy(m, s) == 1.0);
  s.labels.assign(5, 1);
  CHECK(accuracy(m, s) == 0.0);
  m.layers()[0].weight << 1, 0, -1, 0, 0, 0;
  m.layers()[0].bias.setZero();
  s.features.resize(4, 2);
  s.features << 2, 0, -2, 0, 0.5, 1, -0.5, 1;
  s.labels = {0, 1, 0, 0};  // predictions by hand: 0, 1, 0, 1
  CHECK(accuracy(m, s) == 0.75);
  CHECK_THROWS_AS(accuracy(m, s.subset({})), ConfigError);
}

TEST_CASE("evaluate") {
  BenchmarkSpec spec;
  spec.n_train_per_class = 30;
  spec.n_test_per_class = 20;
  spec.n_near = 80;
  spec.n_far = 80;
  const auto b = make_benchmark(spec);
  SUBCASE("zero model scores are constant") {
    MlpClassifier zero({16, 8, 8});
    const auto r = evaluate(zero, b, {ScoreMethod::Msp});
    CHECK(r.find("msp", "near").auroc == 0.5);
    CHECK(r.find("msp", "far").auroc == 0.5);
  }
  SUBCASE("deterministic and bounded") {
    SioConfig c;
    c.alpha = 1.0;
    c.epochs = 2;
    const auto m = train(b.id_train, nullptr, c).model;
    const auto r1 = evaluate(m, b, all_methods());
    const auto r2 = evaluate(m, b, all_methods());
    REQUIRE(r1.entries.size() == all_methods().size() * 2);
    for (std::size_t i = 0; i < r1.entries.size(); ++i) {
      CHECK(r1.entries[i].auroc == r2.entries[i].auroc);
      CHECK(r1.entries[i].fpr95 == r2.entries[i].fpr95);
      CHECK(r1.entries[i].auroc >= 0.0);
      CHECK(r1.entries[i].auroc <= 1.0);
      CHECK(r1.entries[i].fpr95 >= 0.0);
      CHECK(r1.entries[i].fpr95 <= 1.0);
    }
    CHECK(r1.id_accuracy == r2.id_accuracy);
    CHECK_THROWS_AS(r1.find("msp", "middle"), ConfigError);
  }
  SUBCASE("global logit shifts leave energy AUROC unchanged") {
    SioConfig c;
    c.alpha = 1.0;
    c.epochs = 2;
    auto m = train(b.id_train, nullptr, c).model;
    const double before = evaluate(m, b, {ScoreMethod::Energy}).find("energy", "near").auroc;
    m.layers().back().bias.array() += 2.5;
    CHECK(evaluate(m, b, {ScoreMethod::Energy}).find("energy", "near").auroc == before);
  }
}

}
