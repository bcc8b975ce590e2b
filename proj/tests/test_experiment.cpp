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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stack>

#include "doctest.h"
#include "sio/experiment.hpp"

using namespace sio;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "sio_lab_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config() {
  auto c = parse_config(R"(
benchmark.n_train_per_class = 20
benchmark.n_test_per_class = 10
benchmark.n_near = 40
benchmark.n_far = 40
gen.n_syn_per_class = 50
sio.epochs = 2
sio.batch = 32
sio.hidden = 16,16
scorers = msp,energy
seeds = 3
)");
  return c;
}

/// Minimal XML well-formedness check: balanced tags, quoted attributes.
bool well_formed_xml(const std::string& s, int* polylines) {
  std::stack<std::string> open;
  *polylines = 0;
  std::size_t i = 0;
  bool root_seen = false;
  while ((i = s.find('<', i)) != std::string::npos) {
    const auto j = s.find('>', i);
    if (j == std::string::npos) return false;
    std::string tag = s.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    std::size_t quotes = 0;
    for (char ch : tag) quotes += ch == '"';
    if (quotes % 2) return false;
    if (tag[0] == '/') {
      if (open.empty() || open.top() != tag.substr(1)) return false;
      open.pop();
      continue;
    }
    const bool self = tag.back() == '/';
    const std::string name = tag.substr(0, tag.find_first_of(" /"));
    if (name == "polyline") ++*polylines;
    if (open.empty()) {
      if (root_seen) return false;
      root_seen = true;
    }
    if (!self) open.push(name);
  }
  return root_seen && open.empty();
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config parsing") {
  SUBCASE("defaults and round trip through text") {
    const auto c = tiny_config();
    CHECK(c.sio.alpha == 0.8);
    CHECK(c.sio.batch_size == 32);
    CHECK(c.sio.hidden_dims == std::vector<int>{16, 16});
    CHECK(c.scorers.size() == 2);
    const auto back = parse_config(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.hash() == c.hash());
  }
  SUBCASE("comments, blanks and loss modes") {
    const auto c = parse_config("# comment\n\nsio.loss = oe  # trailing\nsio.oe_lambda = 0.25\n");
    REQUIRE(std::holds_alternative<OutlierExposure>(c.sio.loss_mode));
    CHECK(std::get<OutlierExposure>(c.sio.loss_mode).lambda == 0.25);
    const auto l = parse_config("sio.loss = logitnorm\n");
    CHECK(std::get<LogitNorm>(l.sio.loss_mode).tau == 0.04);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_config("bogus.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sio.alpha = lots\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sio.alpha\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sio.loss = hinge\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sio.alpha = 1.5\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("sweep.axis = alpha\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("sweep.values = 0.1\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("seeds = \n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("scorers = msp,openmax\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("sweep.axis = nsyn\nsweep.values = 1.5\n").validate(), ConfigError);
  }
}

TEST_CASE("seed derivation") {
  const auto c = tiny_config();
  CHECK(benchmark_for_seed(c, 1).seed != benchmark_for_seed(c, 2).seed);
  CHECK(arm_config(c, 1, 1.0).seed == arm_config(c, 1, 0.8).seed);
  CHECK(arm_config(c, 1, 0.3).alpha == 0.3);
}

TEST_CASE("single-seed run has 2 arms x scorers x 2 splits rows") {
  const auto c = tiny_config();
  const auto t = run_experiment(c);
  CHECK(t.size() == 2 * 2 * 2);
  for (const auto& r : t) {
    CHECK(r.axis == "none");
    CHECK(r.steps == t.front().steps);
    CHECK(r.frechet == t.front().frechet);
  }
}

TEST_CASE("alpha = 1 arm reproduces the baseline rows") {
  auto c = tiny_config();
  c.sweep_axis = SweepAxis::Alpha;
  c.sweep_values = {0.0, 0.8, 1.0};
  const auto t = run_experiment(c);
  CHECK(t.size() == 3 * 8);
  for (const auto& r : t) {
    if (r.value != 1.0 || r.arm != "sio") continue;
    for (const auto& b : t) {
      if (b.value == 1.0 && b.arm == "baseline" && b.scorer == r.scorer && b.split == r.split) {
        CHECK(b.auroc == r.auroc);
        CHECK(b.fpr95 == r.fpr95);
        CHECK(b.id_acc == r.id_acc);
      }
    }
  }
}

TEST_CASE("quality sweep frechet increases as quality drops") {
  auto c = tiny_config();
  c.generator.n_syn_per_class = 200;
  c.sweep_axis = SweepAxis::Quality;
  c.sweep_values = {1.0, 0.7, 0.4};
  const auto t = run_experiment(c);
  auto fr = [&](double q) {
    for (const auto& r : t)
      if (r.value == q) return r.frechet;
    return -1.0;
  };
  CHECK(fr(0.4) > fr(0.7));
  CHECK(fr(0.7) > fr(1.0));
}

TEST_CASE("threaded runs match serial runs") {
  auto c = tiny_config();
  c.seeds = {1, 2};
  c.sweep_axis = SweepAxis::NSyn;
  c.sweep_values = {10, 50};
  const auto serial = run_experiment(c);
  c.threads = 3;
  const auto par = run_experiment(c);
  const auto d = scratch_dir("threads");
  save_results(serial, d / "a.csv");
  save_results(par, d / "b.csv");
  CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
}

TEST_CASE("results round trip and summaries") {
  auto c = tiny_config();
  c.seeds = {1, 2};
  const auto t = run_experiment(c);
  const auto d = scratch_dir("report");
  save_results(t, d / "results.csv");
  CHECK(slurp(d / "results.csv").rfind(std::string(kResultsHeader) + "\n", 0) == 0);
  const auto back = load_results(d / "results.csv");
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].auroc == t[i].auroc);
    CHECK(back[i].scorer == t[i].scorer);
  }
  const auto s = summarize(t);
  CHECK(s.size() == t.size() / 2);
  for (const auto& row : s) {
    double sum = 0;
    int n = 0;
    for (const auto& r : t)
      if (r.arm == row.arm && r.scorer == row.scorer && r.split == row.split) sum += r.auroc, ++n;
    CHECK(row.n_seeds == 2);
    CHECK(row.auroc_mean == doctest::Approx(sum / n).epsilon(1e-15));
  }
  const auto one = summarize({t.front()});
  CHECK(one.front().auroc_mean == t.front().auroc);
  CHECK(one.front().auroc_std == 0.0);
}

TEST_CASE("report charts are well-formed svg") {
  auto c = tiny_config();
  c.sweep_axis = SweepAxis::Alpha;
  c.sweep_values = {0.5, 1.0};
  const auto t = run_experiment(c);
  const auto d = scratch_dir("charts");
  const auto files = write_report(t, d);
  CHECK(fs::exists(d / "results.csv"));
  CHECK(fs::exists(d / "summary_alpha.csv"));
  int lines = 0;
  REQUIRE(fs::exists(d / "chart_alpha.svg"));
  CHECK(well_formed_xml(slurp(d / "chart_alpha.svg"), &lines));
  CHECK(lines == 2);
  REQUIRE(fs::exists(d / "scatter_acc_vs_near.svg"));
  CHECK(well_formed_xml(slurp(d / "scatter_acc_vs_near.svg"), &lines));
  CHECK_THROWS(write_report({}, d));
}

}
