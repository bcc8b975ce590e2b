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
#include <limits>
#include <random>

#include "doctest.h"
#include "sio/common.hpp"

using namespace sio;

TEST_SUITE("common") {

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, double(int(rng() % 40)) - 20.0);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("strict number parsing") {
  CHECK(parse_int("42") == 42);
  CHECK(parse_double(" 1.5 ") == 1.5);
  CHECK_THROWS_AS(parse_double("1.5x"), ParseError);
  CHECK_THROWS_AS(parse_double(""), ParseError);
  CHECK_THROWS_AS(parse_int("3.0"), ParseError);
}

TEST_CASE("split and trim") {
  const auto parts = split_string("a,,b", ',');
  REQUIRE(parts.size() == 3);
  CHECK(parts[1].empty());
  CHECK(trim("  x y\t") == "x y");
}

TEST_CASE("derived seeds separate purposes and indices") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("rounding is half away from zero") {
  CHECK(round_half_away(102.4) == 102);
  CHECK(round_half_away(2.5) == 3);
  CHECK(round_half_away(-2.5) == -3);
  CHECK(round_half_away(0.5) == 1);
}

TEST_CASE("argmax ties resolve low") {
  Vector v(4);
  v << 1, 3, 3, 0;
  CHECK(argmax(v) == 1);
  CHECK(argmax(Vector::Zero(5)) == 0);
}

TEST_CASE("softmax sums to one and ignores shifts") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    Vector z(6);
    for (auto& v : z) v = n(rng);
    const Vector p = softmax(z);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    const Vector q = softmax((z.array() + n(rng)).matrix());
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
  }
  Vector big(2);
  big << 1000.0, 0.0;
  CHECK(std::isfinite(log_sum_exp(big)));
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0));
}

}
