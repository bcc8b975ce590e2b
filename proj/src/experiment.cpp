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

#include "sio/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

namespace sio {

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::None: return "none";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::NSyn: return "nsyn";
    case SweepAxis::Quality: return "quality";
  }
  return "none";
}

void ExperimentConfig::validate() const {
  benchmark.validate();
  sio.validate();
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (scorers.empty()) throw ConfigError("config: scorers must be nonempty");
  if (generator.n_syn_per_class < 0) throw ConfigError("config: gen.n_syn_per_class < 0");
  if (!(generator.quality > 0.0 && generator.quality <= 1.0)) {
    throw ConfigError("config: gen.quality must lie in (0, 1]");
  }
  if (sweep_axis == SweepAxis::None && !sweep_values.empty()) {
    throw ConfigError("config: sweep.values given but sweep.axis = none");
  }
  if (sweep_axis != SweepAxis::None && sweep_values.empty()) {
    throw ConfigError("config: sweep.axis = " + axis_name(sweep_axis) + " needs sweep.values");
  }
  for (double v : sweep_values) {
    switch (sweep_axis) {
      case SweepAxis::Alpha:
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("config: alpha sweep value outside [0, 1]");
        break;
      case SweepAxis::NSyn:
        if (v < 0.0 || v != std::floor(v)) {
          throw ConfigError("config: nsyn sweep values must be nonnegative integers");
        }
        break;
      case SweepAxis::Quality:
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError("config: quality sweep value outside (0, 1]");
        break;
      case SweepAxis::None: break;
    }
  }
  if (std::holds_alternative<OutlierExposure>(sio.loss_mode) && n_aux_outliers < 1) {
    throw ConfigError("config: OE training needs n_aux_outliers >= 1");
  }
  if (threads < 0) throw ConfigError("config: run.threads must be >= 0");
}

namespace {

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + fmt(items[i]);
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected boolean, got '" + v + "'");
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& part : split_string(v, ',')) {
    auto t = std::string(trim(part));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  auto fd = [](double v) { return format_double(v); };
  o << "benchmark.K = " << benchmark.num_classes << '\n'
    << "benchmark.d = " << benchmark.dim << '\n'
    << "benchmark.n_train_per_class = " << benchmark.n_train_per_class << '\n'
    << "benchmark.n_test_per_class = " << benchmark.n_test_per_class << '\n'
    << "benchmark.n_near = " << benchmark.n_near << '\n'
    << "benchmark.n_far = " << benchmark.n_far << '\n'
    << "benchmark.r_id = " << fd(benchmark.r_id) << '\n'
    << "benchmark.spread = " << fd(benchmark.spread) << '\n'
    << "benchmark.r_far = " << fd(benchmark.r_far) << '\n'
    << "benchmark.seed_base = " << seed_base << '\n'
    << "gen.ridge = " << fd(generator.ridge) << '\n'
    << "gen.n_syn_per_class = " << generator.n_syn_per_class << '\n'
    << "gen.quality = " << fd(generator.quality) << '\n'
    << "gen.pseudo_label = " << (generator.pseudo_label ? "true" : "false") << '\n'
    << "sio.alpha = " << fd(sio.alpha) << '\n'
    << "sio.batch = " << sio.batch_size << '\n'
    << "sio.epochs = " << sio.epochs << '\n'
    << "sio.loss = " << loss_mode_name(sio.loss_mode) << '\n';
  if (auto* oe = std::get_if<OutlierExposure>(&sio.loss_mode)) {
    o << "sio.oe_lambda = " << fd(oe->lambda) << '\n';
  }
  if (auto* ln = std::get_if<LogitNorm>(&sio.loss_mode)) {
    o << "sio.logitnorm_tau = " << fd(ln->tau) << '\n';
  }
  o << "sio.hidden = " << join<int>(sio.hidden_dims, [](const int& h) { return std::to_string(h); })
    << '\n'
    << "sio.n_aux_outliers = " << n_aux_outliers << '\n'
    << "opt.lr0 = " << fd(sio.lr0) << '\n'
    << "opt.momentum = " << fd(sio.momentum) << '\n'
    << "opt.weight_decay = " << fd(sio.weight_decay) << '\n'
    << "opt.nesterov = " << (sio.nesterov ? "true" : "false") << '\n'
    << "scorers = " << join<ScoreMethod>(scorers, [](const ScoreMethod& m) { return method_name(m); })
    << '\n'
    << "scorer.tempscale_t = " << fd(scorer_params.temp_scale_t) << '\n'
    << "scorer.energy_t = " << fd(scorer_params.energy_t) << '\n'
    << "scorer.odin_t = " << fd(scorer_params.odin_t) << '\n';
  if (scorer_params.odin_eps) o << "scorer.odin_eps = " << fd(*scorer_params.odin_eps) << '\n';
  o << "scorer.react_p = " << fd(scorer_params.react_percentile) << '\n'
    << "scorer.knn_k = " << scorer_params.knn_k << '\n'
    << "scorer.knn_normalize = " << (scorer_params.knn_normalize ? "true" : "false") << '\n'
    << "scorer.dice_p = " << fd(scorer_params.dice_percent) << '\n';
  if (scorer_params.vim_dim) o << "scorer.vim_dim = " << *scorer_params.vim_dim << '\n';
  o << "sweep.axis = " << axis_name(sweep_axis) << '\n';
  if (!sweep_values.empty()) {
    o << "sweep.values = " << join<double>(sweep_values, [](const double& v) { return format_double(v); })
      << '\n';
  }
  o << "seeds = "
    << join<std::uint64_t>(seeds, [](const std::uint64_t& s) { return std::to_string(s); }) << '\n'
    << "out.dir = " << out_dir.string() << '\n';
  return o.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(to_text()); }

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::optional<double> oe_lambda, ln_tau;
  std::string loss = "ce";
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash_pos = line.find('#'); hash_pos != std::string_view::npos) {
      line = line.substr(0, hash_pos);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string v(trim(line.substr(eq + 1)));
    auto as_int = [&]() { return static_cast<int>(parse_int(v)); };
    auto as_real = [&]() { return parse_double(v); };
    try {
      if (key == "benchmark.K") c.benchmark.num_classes = as_int();
      else if (key == "benchmark.d") c.benchmark.dim = as_int();
      else if (key == "benchmark.n_train_per_class") c.benchmark.n_train_per_class = as_int();
      else if (key == "benchmark.n_test_per_class") c.benchmark.n_test_per_class = as_int();
      else if (key == "benchmark.n_near") c.benchmark.n_near = as_int();
      else if (key == "benchmark.n_far") c.benchmark.n_far = as_int();
      else if (key == "benchmark.r_id") c.benchmark.r_id = as_real();
      else if (key == "benchmark.spread") c.benchmark.spread = as_real();
      else if (key == "benchmark.r_far") c.benchmark.r_far = as_real();
      else if (key == "benchmark.seed_base") c.seed_base = static_cast<std::uint64_t>(parse_int(v));
      else if (key == "gen.ridge") c.generator.ridge = as_real();
      else if (key == "gen.n_syn_per_class") c.generator.n_syn_per_class = as_int();
      else if (key == "gen.quality") c.generator.quality = as_real();
      else if (key == "gen.pseudo_label") c.generator.pseudo_label = parse_bool(v);
      else if (key == "sio.alpha") c.sio.alpha = as_real();
      else if (key == "sio.batch") c.sio.batch_size = as_int();
      else if (key == "sio.epochs") c.sio.epochs = as_int();
      else if (key == "sio.loss") loss = v;
      else if (key == "sio.oe_lambda") oe_lambda = as_real();
      else if (key == "sio.logitnorm_tau") ln_tau = as_real();
      else if (key == "sio.n_aux_outliers") c.n_aux_outliers = as_int();
      else if (key == "sio.hidden") {
        c.sio.hidden_dims.clear();
        for (const auto& h : parse_list(v)) c.sio.hidden_dims.push_back(static_cast<int>(parse_int(h)));
      }
      else if (key == "opt.lr0") c.sio.lr0 = as_real();
      else if (key == "opt.momentum") c.sio.momentum = as_real();
      else if (key == "opt.weight_decay") c.sio.weight_decay = as_real();
      else if (key == "opt.nesterov") c.sio.nesterov = parse_bool(v);
      else if (key == "scorers") {
        c.scorers.clear();
        for (const auto& s : parse_list(v)) c.scorers.push_back(parse_method(s));
      }
      else if (key == "scorer.tempscale_t") c.scorer_params.temp_scale_t = as_real();
      else if (key == "scorer.energy_t") c.scorer_params.energy_t = as_real();
      else if (key == "scorer.odin_t") c.scorer_params.odin_t = as_real();
      else if (key == "scorer.odin_eps") c.scorer_params.odin_eps = as_real();
      else if (key == "scorer.react_p") c.scorer_params.react_percentile = as_real();
      else if (key == "scorer.knn_k") c.scorer_params.knn_k = as_int();
      else if (key == "scorer.knn_normalize") c.scorer_params.knn_normalize = parse_bool(v);
      else if (key == "scorer.dice_p") c.scorer_params.dice_percent = as_real();
      else if (key == "scorer.vim_dim") c.scorer_params.vim_dim = as_int();
      else if (key == "sweep.axis") {
        if (v == "none") c.sweep_axis = SweepAxis::None;
        else if (v == "alpha") c.sweep_axis = SweepAxis::Alpha;
        else if (v == "nsyn") c.sweep_axis = SweepAxis::NSyn;
        else if (v == "quality") c.sweep_axis = SweepAxis::Quality;
        else throw ConfigError("unknown sweep axis '" + v + "'");
      }
      else if (key == "sweep.values") {
        c.sweep_values.clear();
        for (const auto& s : parse_list(v)) c.sweep_values.push_back(parse_double(s));
      }
      else if (key == "seeds") {
        c.seeds.clear();
        for (const auto& s : parse_list(v)) c.seeds.push_back(static_cast<std::uint64_t>(parse_int(s)));
      }
      else if (key == "out.dir") c.out_dir = v;
      else if (key == "run.threads") c.threads = as_int();
      else throw ConfigError("unknown key '" + key + "'");
    } catch (const ParseError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + " (" + key + "): " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (loss == "ce") {
    if (oe_lambda || ln_tau) throw ConfigError("config: loss parameters given for sio.loss = ce");
    c.sio.loss_mode = CrossEntropy{};
  } else if (loss == "oe") {
    if (ln_tau) throw ConfigError("config: sio.logitnorm_tau given for sio.loss = oe");
    c.sio.loss_mode = OutlierExposure{oe_lambda.value_or(0.5)};
  } else if (loss == "logitnorm") {
    if (oe_lambda) throw ConfigError("config: sio.oe_lambda given for sio.loss = logitnorm");
    c.sio.loss_mode = LogitNorm{ln_tau.value_or(0.04)};
  } else {
    throw ConfigError("config: unknown sio.loss '" + loss + "' (ce|oe|logitnorm)");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

BenchmarkSpec benchmark_for_seed(const ExperimentConfig& config, std::uint64_t seed) {
  BenchmarkSpec spec = config.benchmark;
  spec.seed = derive_seed(config.seed_base, "benchmark", seed);
  return spec;
}

SioConfig arm_config(const ExperimentConfig& config, std::uint64_t seed, double alpha) {
  SioConfig c = config.sio;
  c.alpha = alpha;
  c.seed = derive_seed(config.seed_base, "train", seed);
  return c;
}

SyntheticPool make_pool(const ExperimentConfig& config, const BenchmarkSuite& bench,
                        std::uint64_t seed, const GeneratorSettings& gen,
                        const MlpClassifier* labeler) {
  const double ridge = gen.ridge > 0.0 ? gen.ridge : default_ridge(bench.id_train);
  ClassGaussianModel model = fit_class_gaussians(bench.id_train, ridge, !gen.pseudo_label);
  model = degrade(model, gen.quality, derive_seed(config.seed_base, "degrade", seed),
                  bench.spec.r_id);
  SyntheticPool pool =
      sample(model, gen.n_syn_per_class, derive_seed(config.seed_base, "pool", seed));
  if (gen.pseudo_label) {
    if (labeler == nullptr) throw ConfigError("pseudo-labeling needs a trained classifier");
    pool = pseudo_label(pool, *labeler);
  }
  return pool;
}

namespace {

void append_rows(ResultTable& rows, const std::string& axis, double value, std::uint64_t seed,
                 const std::string& arm, const MetricReport& report, double frechet, long steps) {
  for (const auto& e : report.entries) {
    rows.push_back({axis, value, seed, arm, e.scorer, e.split, e.auroc, e.fpr95,
                    report.id_accuracy, frechet, steps});
  }
}

ResultTable run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const std::string axis = axis_name(config.sweep_axis);
  const BenchmarkSuite bench = make_benchmark(benchmark_for_seed(config, seed));
  std::optional<LabeledSet> outliers;
  if (std::holds_alternative<OutlierExposure>(config.sio.loss_mode)) {
    outliers = make_aux_outliers(bench.spec, config.n_aux_outliers);
  }
  const LabeledSet* out_ptr = outliers ? &*outliers : nullptr;

  const TrainRun baseline = train(bench.id_train, nullptr, arm_config(config, seed, 1.0), out_ptr);
  const MetricReport base_report =
      evaluate(baseline.model, bench, config.scorers, config.scorer_params);

  std::vector<double> values = config.sweep_values;
  if (config.sweep_axis == SweepAxis::None) values = {config.sio.alpha};

  ResultTable rows;
  for (double value : values) {
    GeneratorSettings gen = config.generator;
    double alpha = config.sio.alpha;
    switch (config.sweep_axis) {
      case SweepAxis::Alpha: alpha = value; break;
      case SweepAxis::NSyn: gen.n_syn_per_class = static_cast<int>(value); break;
      case SweepAxis::Quality: gen.quality = value; break;
      case SweepAxis::None: break;
    }
    const SyntheticPool pool = make_pool(config, bench, seed, gen, &baseline.model);
    const double frechet = pool.samples.size() >= 2 ? pool_frechet(pool, bench.id_train) : 0.0;
    const TrainRun sio_run = train(bench.id_train, &pool, arm_config(config, seed, alpha), out_ptr);
    const MetricReport sio_report =
        evaluate(sio_run.model, bench, config.scorers, config.scorer_params);
    append_rows(rows, axis, value, seed, "baseline", base_report, frechet, baseline.steps);
    append_rows(rows, axis, value, seed, "sio", sio_report, frechet, sio_run.steps);
  }
  return rows;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_tasks = config.seeds.size();
  std::vector<ResultTable> per_seed(n_tasks);
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      try {
        per_seed[i] = run_seed(config, config.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(
      n_tasks, config.threads == 0 ? hw : static_cast<unsigned>(config.threads));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ResultTable table;
  for (auto& rows : per_seed) table.insert(table.end(), rows.begin(), rows.end());
  std::stable_sort(table.begin(), table.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.value, a.seed, a.arm, a.scorer, a.split) <
           std::tie(b.value, b.seed, b.arm, b.scorer, b.split);
  });
  return table;
}

}  // namespace sio
