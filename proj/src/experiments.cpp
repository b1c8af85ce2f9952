// Copyright 2026 The faultbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "faultbp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "faultbp/error.hpp"
#include "faultbp/oracle.hpp"
#include "faultbp/spectral.hpp"

namespace faultbp {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kNbp: return "nbp";
    case Algorithm::kMaxProduct: return "maxprod";
    case Algorithm::kSumProduct: return "sumprod";
    case Algorithm::kOracle: return "oracle";
  }
  return "nbp";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "nbp") return Algorithm::kNbp;
  if (name == "maxprod") return Algorithm::kMaxProduct;
  if (name == "sumprod") return Algorithm::kSumProduct;
  if (name == "oracle") return Algorithm::kOracle;
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + name + "'");
}

const char* to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kP: return "p";
    case SweepParam::kQ: return "q";
    case SweepParam::kSigma: return "sigma";
    case SweepParam::kReportedP: return "p-reported";
    case SweepParam::kBins: return "bins";
  }
  return "p";
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "p") return SweepParam::kP;
  if (name == "q") return SweepParam::kQ;
  if (name == "sigma") return SweepParam::kSigma;
  if (name == "p-reported") return SweepParam::kReportedP;
  if (name == "bins") return SweepParam::kBins;
  throw Error(ErrorCode::kInvalidArgument, "unknown sweep parameter '" + name + "'");
}

Score score(const FaultPattern& truth, const FaultPattern& estimate) {
  require(truth.size() == estimate.size(), ErrorCode::kDimensionMismatch,
          "pattern lengths " + std::to_string(truth.size()) + " and " +
              std::to_string(estimate.size()) + " differ");
  Score out{true, 0, 0, 0};
  for (Eigen::Index s = 0; s < truth.size(); ++s) {
    const bool t = truth[s] != 0;
    const bool e = estimate[s] != 0;
    if (t != e) out.exact_match = false;
    out.tp += t && e;
    out.fp += !t && e;
    out.fn += t && !e;
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t grid_point, std::uint64_t trial) {
  // splitmix64 finalizer chained over the three words.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ grid_point) ^ trial);
}

AlgorithmRun run_algorithm(Algorithm algorithm, const FaultModeld& model,
                           const MeasurementVector<double>& y, const SolveSettings& settings,
                           bool timing) {
  AlgorithmRun run;
  run.algorithm = algorithm;
  const auto start = std::chrono::steady_clock::now();
  switch (algorithm) {
    case Algorithm::kNbp: {
      auto result = solve(model, y, settings.nbp);
      run.soft = std::move(result.soft);
      run.iterations = result.iterations;
      run.converged = result.converged;
      break;
    }
    case Algorithm::kMaxProduct:
    case Algorithm::kSumProduct: {
      const auto pm = to_pairwise(model, y);
      auto result = discrete_bp(pm,
                                algorithm == Algorithm::kMaxProduct ? Semiring::kMaxProduct
                                                                    : Semiring::kSumProduct,
                                settings.discrete);
      run.soft = std::move(result.soft);
      run.iterations = result.iterations;
      run.converged = result.converged;
      break;
    }
    case Algorithm::kOracle: {
      run.soft = as_real<double>(exhaustive_map(model, y).pattern);
      break;
    }
  }
  for (Pipeline pipeline : kAllPipelines) {
    run.patterns.push_back(harden(model, y, run.soft, pipeline));
    run.losses.push_back(log_loss(model, y, run.patterns.back()));
  }
  if (timing) {
    run.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return run;
}

void validate(const SweepConfig& config) {
  require(!config.values.empty(), ErrorCode::kInvalidArgument, "sweep grid is empty");
  require(config.trials >= 1, ErrorCode::kInvalidArgument, "trials must be positive");
  require(!config.algorithms.empty(), ErrorCode::kInvalidArgument, "no algorithm selected");
  require(!config.pipelines.empty(), ErrorCode::kInvalidArgument, "no pipeline selected");
  require(config.workers >= 0, ErrorCode::kInvalidArgument, "workers must be non-negative");
  validate(config.base);
  validate(config.settings.nbp);
  for (double v : config.values) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "sweep value is not finite");
    GeneratorConfig g = config.base;
    switch (config.param) {
      case SweepParam::kP: g.p = v; break;
      case SweepParam::kQ: g.q = v; break;
      case SweepParam::kSigma: g.sigma = v; break;
      case SweepParam::kReportedP:
        require(v > 0.0 && v < 1.0, ErrorCode::kInvalidArgument,
                "reported p must lie in (0,1)");
        break;
      case SweepParam::kBins:
        require(v >= 8 && v == std::floor(v), ErrorCode::kInvalidArgument,
                "bins must be an integer of at least 8");
        break;
    }
    validate(g);
  }
}

TrialRecord run_trial(const SweepConfig& config, std::size_t grid_point, int trial) {
  const double value = config.values.at(grid_point);
  GeneratorConfig gen = config.base;
  SolveSettings settings = config.settings;
  double reported = gen.p;
  switch (config.param) {
    case SweepParam::kP: gen.p = value; reported = value; break;
    case SweepParam::kQ: gen.q = value; break;
    case SweepParam::kSigma: gen.sigma = value; break;
    case SweepParam::kReportedP: reported = value; break;
    case SweepParam::kBins: settings.nbp.bins = static_cast<int>(value); break;
  }
  const std::uint64_t seed =
      trial_seed(config.seed, grid_point, static_cast<std::uint64_t>(trial));
  auto instance = sample_instance<double>(gen, seed);
  const FaultModeld model = reported == gen.p
                                ? instance.model
                                : instance.model.with_priors(
                                      Vector<double>::Constant(gen.n, reported));
  TrialRecord record{seed, gen, std::move(instance.truth), std::move(instance.measurements), {}};
  for (Algorithm algorithm : config.algorithms) {
    record.runs.push_back(
        run_algorithm(algorithm, model, record.measurements, settings, config.timing));
  }
  return record;
}

AggregateMetrics aggregate(const std::vector<TrialRecord>& trials, std::size_t run_index,
                           std::size_t pipeline_index) {
  require(!trials.empty(), ErrorCode::kInvalidArgument, "no trials to aggregate");
  long errors = 0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double runtime = 0;
  double iters = 0;
  for (const auto& trial : trials) {
    const auto& run = trial.runs.at(run_index);
    const Score s = score(trial.truth, run.patterns.at(pipeline_index));
    errors += !s.exact_match;
    tp += s.tp;
    fp += s.fp;
    fn += s.fn;
    runtime += run.runtime_s;
    iters += run.iterations;
  }
  const double count = static_cast<double>(trials.size());
  AggregateMetrics out;
  out.algorithm = trials.front().runs.at(run_index).algorithm;
  out.pipeline = kAllPipelines[pipeline_index];
  out.param_value = 0;
  out.trials = static_cast<int>(trials.size());
  out.wer = static_cast<double>(errors) / count;
  out.wer_ci = 1.96 * std::sqrt(out.wer * (1.0 - out.wer) / count);
  out.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  out.mean_runtime_s = runtime / count;
  out.mean_iters = iters / count;
  return out;
}

SweepResult run_sweep(const SweepConfig& config) {
  validate(config);
  enable_concurrent_fft_planning();
  const std::size_t points = config.values.size();
  const auto per_point = static_cast<std::size_t>(config.trials);
  std::vector<std::vector<TrialRecord>> records(points);
  for (auto& r : records) r.reserve(per_point);
  std::vector<std::vector<std::optional<TrialRecord>>> slots(
      points, std::vector<std::optional<TrialRecord>>(per_point));

  const std::size_t total = points * per_point;
  std::size_t workers = config.workers > 0 ? static_cast<std::size_t>(config.workers)
                                           : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&] {
    for (std::size_t item = next++; item < total; item = next++) {
      try {
        const std::size_t g = item / per_point;
        const std::size_t t = item % per_point;
        slots[g][t] = run_trial(config, g, static_cast<int>(t));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_lock);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  for (std::size_t g = 0; g < points; ++g) {
    for (auto& slot : slots[g]) records[g].push_back(std::move(*slot));
    for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
      for (Pipeline pipeline : config.pipelines) {
        const auto index = static_cast<std::size_t>(pipeline);
        AggregateMetrics row = aggregate(records[g], a, index);
        row.param_name = to_string(config.param);
        row.param_value = config.values[g];
        result.rows.push_back(std::move(row));
      }
    }
  }
  if (config.keep_records) result.records = std::move(records);
  return result;
}

void write_csv(std::ostream& os, const std::vector<AggregateMetrics>& rows) {
  os << "param_name,param_value,algorithm,pipeline,trials,wer,wer_ci,precision,recall,"
        "mean_runtime_s,mean_iters\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.param_name << ',' << r.param_value << ',' << to_string(r.algorithm) << ','
       << to_string(r.pipeline) << ',' << r.trials << ',' << r.wer << ',' << r.wer_ci << ','
       << r.precision << ',' << r.recall << ',' << r.mean_runtime_s << ',' << r.mean_iters
       << '\n';
  }
}

std::vector<PrPoint> pr_curve(const std::vector<TrialRecord>& trials, std::size_t run_index,
                              const std::vector<double>& thresholds) {
  std::vector<PrPoint> out;
  out.reserve(thresholds.size());
  for (double threshold : thresholds) {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    for (const auto& trial : trials) {
      const auto& soft = trial.runs.at(run_index).soft;
      FaultPattern x(soft.size());
      for (Eigen::Index s = 0; s < soft.size(); ++s) x[s] = soft[s] > threshold ? 1 : 0;
      const Score sc = score(trial.truth, x);
      tp += sc.tp;
      fp += sc.fp;
      fn += sc.fn;
    }
    out.push_back({threshold,
                   tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp),
                   tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn)});
  }
  return out;
}

}  // namespace faultbp
