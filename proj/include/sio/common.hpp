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

#ifndef SIO_COMMON_HPP_
#define SIO_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sio {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Malformed input files (CSV, checkpoints, config).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments violating an operation's contract.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A statistic could not be estimated from the supplied data.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; throws ParseError on trailing garbage.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split_string(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Derives an independent stream seed from a base seed and a purpose tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, std::string_view purpose, std::uint64_t index = 0) {
  return Rng(derive_seed(base, purpose, index));
}

/// Half away from zero, as std::lround.
int round_half_away(double value);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(const Vector& values);

/// Numerically stable log(sum(exp(values))).
double log_sum_exp(const Vector& values);

Vector softmax(const Vector& logits);

}  // namespace sio

#endif  // SIO_COMMON_HPP_
