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

// Command-line driver. Every stage works inside one directory (--out):
//   bench-gen  -> id_train.csv id_test.csv near_ood.csv far_ood.csv
//   fit-gen    -> generator.txt pool.csv
//   train      -> model.txt train_log.csv
//   eval       -> metrics.csv scores.csv fitstats.txt
//   sweep      -> results.csv summary_*.csv *.svg
//   report     -> summary_*.csv *.svg from an existing results.csv

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sio/datasets.hpp"
#include "sio/experiment.hpp"
#include "sio/generator.hpp"
#include "sio/metrics.hpp"
#include "sio/nnet.hpp"
#include "sio/scoring.hpp"
#include "sio/sio_trainer.hpp"

namespace fs = std::filesystem;
using namespace sio;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ExperimentConfig resolve_config(const GlobalOptions& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) c.seeds = {*g.seed};
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  c.validate();
  return c;
}

fs::path ensure_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

BenchmarkSuite load_suite(const ExperimentConfig& c, const fs::path& dir) {
  BenchmarkSuite s;
  s.spec = benchmark_for_seed(c, c.seeds.front());
  const int k = c.benchmark.num_classes;
  s.id_train = load_csv(dir / "id_train.csv", k);
  s.id_test = load_csv(dir / "id_test.csv", k);
  s.near_ood = load_csv(dir / "near_ood.csv", k);
  s.far_ood = load_csv(dir / "far_ood.csv", k);
  return s;
}

void cmd_bench_gen(const ExperimentConfig& c) {
  const fs::path dir = ensure_dir(c.out_dir);
  const auto suite = make_benchmark(benchmark_for_seed(c, c.seeds.front()));
  save_csv(suite.id_train, dir / "id_train.csv");
  save_csv(suite.id_test, dir / "id_test.csv");
  save_csv(suite.near_ood, dir / "near_ood.csv");
  save_csv(suite.far_ood, dir / "far_ood.csv");
  std::cout << "wrote benchmark to " << dir << " (" << suite.id_train.size() << " train rows)\n";
}

void cmd_fit_gen(const ExperimentConfig& c) {
  const fs::path dir = c.out_dir;
  const auto suite = load_suite(c, dir);
  const auto& gen = c.generator;
  const double ridge = gen.ridge > 0.0 ? gen.ridge : default_ridge(suite.id_train);
  auto model = fit_class_gaussians(suite.id_train, ridge, !gen.pseudo_label);
  model = degrade(model, gen.quality, derive_seed(c.seed_base, "degrade", c.seeds.front()),
                  c.benchmark.r_id);
  save_model(model, dir / "generator.txt");
  std::optional<TrainRun> labeler;
  if (gen.pseudo_label) {
    labeler = train(suite.id_train, nullptr, arm_config(c, c.seeds.front(), 1.0));
  }
  const auto pool = make_pool(c, suite, c.seeds.front(), gen, labeler ? &labeler->model : nullptr);
  save_csv(pool.samples, dir / "pool.csv");
  std::cout << "pool: " << pool.samples.size() << " samples, frechet to id_train "
            << format_double(pool_frechet(pool, suite.id_train)) << '\n';
}

void cmd_train(const ExperimentConfig& c, const std::string& arm) {
  const fs::path dir = c.out_dir;
  const auto train_set = load_csv(dir / "id_train.csv", c.benchmark.num_classes);
  const double alpha = arm == "baseline" ? 1.0 : c.sio.alpha;
  std::optional<SyntheticPool> pool;
  if (alpha < 1.0) {
    pool.emplace();
    pool->samples = load_csv(dir / "pool.csv", c.benchmark.num_classes);
  }
  std::optional<LabeledSet> outliers;
  if (std::holds_alternative<OutlierExposure>(c.sio.loss_mode)) {
    outliers = make_aux_outliers(benchmark_for_seed(c, c.seeds.front()), c.n_aux_outliers);
  }
  const auto run = train(train_set, pool ? &*pool : nullptr, arm_config(c, c.seeds.front(), alpha),
                         outliers ? &*outliers : nullptr);
  save_checkpoint(run.model, dir / "model.txt");
  save_train_log(run, dir / "train_log.csv");
  std::cout << arm << ": " << run.steps << " steps, final train acc "
            << format_double(run.log.back().train_acc) << '\n';
}

void cmd_eval(const ExperimentConfig& c) {
  const fs::path dir = c.out_dir;
  const auto suite = load_suite(c, dir);
  const auto model = load_checkpoint(dir / "model.txt");
  FitStats stats;
  const auto scored = score_benchmark(model, suite, c.scorers, c.scorer_params, &stats);
  save_fit_stats(stats, dir / "fitstats.txt");

  std::vector<ScoreDumpRow> dump;
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  metrics << "scorer,split,auroc,fpr95,id_acc\n";
  const double acc = accuracy(model, suite.id_test);
  for (std::size_t i = 0; i < c.scorers.size(); ++i) {
    const auto name = method_name(c.scorers[i]);
    const auto& s = scored[i];
    for (const auto& [split, ood] : {std::pair{"near", &s.near_ood}, std::pair{"far", &s.far_ood}}) {
      metrics << name << ',' << split << ',' << format_double(auroc(s.id_test, *ood)) << ','
              << format_double(fpr_at_tpr(s.id_test, *ood)) << ',' << format_double(acc) << '\n';
    }
    auto add = [&](const char* split, const std::vector<double>& v) {
      for (std::size_t j = 0; j < v.size(); ++j) dump.push_back({j, split, name, v[j]});
    };
    add("id_test", s.id_test);
    add("near_ood", s.near_ood);
    add("far_ood", s.far_ood);
  }
  save_score_dump(dump, dir / "scores.csv");
  std::cout << "id accuracy " << format_double(acc) << "; metrics in " << dir / "metrics.csv"
            << '\n';
}

void cmd_sweep(const ExperimentConfig& c) {
  const auto table = run_experiment(c);
  const auto files = write_report(table, c.out_dir);
  std::cout << table.size() << " result rows; wrote " << files.size() << " files to "
            << c.out_dir << '\n';
}

void cmd_report(const GlobalOptions& g, const std::string& results_path) {
  const fs::path out = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
  const fs::path in = results_path.empty() ? out / "results.csv" : fs::path(results_path);
  const auto table = load_results(in);
  const auto files = write_report(table, out);
  std::cout << "wrote " << files.size() << " files to " << out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SIO lab: synthetic-augmented training and post-hoc OOD scoring"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Experiment config file (key = value)");
  auto* seed_opt = app.add_option("--seed", seed, "Run only this seed");
  app.add_option("--out", g.out_dir, "Working/output directory (overrides out.dir)");

  auto* bench = app.add_subcommand("bench-gen", "Generate the synthetic benchmark CSVs");
  auto* fit = app.add_subcommand("fit-gen", "Fit the class-Gaussian generator and sample a pool");
  auto* tr = app.add_subcommand("train", "Train a classifier on id_train (+ pool)");
  std::string arm = "sio";
  tr->add_option("--arm", arm, "baseline or sio")->check(CLI::IsMember({"baseline", "sio"}));
  auto* ev = app.add_subcommand("eval", "Score the benchmark with the trained model");
  auto* sw = app.add_subcommand("sweep", "Run the configured experiment and write the report");
  auto* rp = app.add_subcommand("report", "Summaries and charts from results.csv");
  std::string results_path;
  rp->add_option("--results", results_path, "results.csv to summarize (default OUT/results.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (rp->parsed()) {
      cmd_report(g, results_path);
      return 0;
    }
    const auto config = resolve_config(g);
    if (bench->parsed()) cmd_bench_gen(config);
    else if (fit->parsed()) cmd_fit_gen(config);
    else if (tr->parsed()) cmd_train(config, arm);
    else if (ev->parsed()) cmd_eval(config);
    else if (sw->parsed()) cmd_sweep(config);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
