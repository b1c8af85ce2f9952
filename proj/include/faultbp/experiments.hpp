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

// Benchmark harness: random trials, solver pipelines, WER and
// precision/recall aggregation, CSV output.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "faultbp/discrete_bp.hpp"
#include "faultbp/heuristics.hpp"
#include "faultbp/model.hpp"
#include "faultbp/nbp.hpp"

namespace faultbp {

enum class Algorithm { kNbp, kMaxProduct, kSumProduct, kOracle };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

enum class SweepParam { kP, kQ, kSigma, kReportedP, kBins };

const char* to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& name);

inline constexpr Pipeline kAllPipelines[] = {Pipeline::kNone, Pipeline::kRound,
                                             Pipeline::kRoundLocal};

struct SolveSettings {
  SolverConfig<double> nbp;
  DiscreteBpConfig<double> discrete;
};

struct AlgorithmRun {
  Algorithm algorithm;
  SoftDecision<double> soft;
  /// Indexed like kAllPipelines.
  std::vector<FaultPattern> patterns;
  std::vector<double> losses;
  double runtime_s = 0;
  int iterations = 0;
  bool converged = true;
};

struct TrialRecord {
  std::uint64_t seed;
  GeneratorConfig config;
  FaultPattern truth;
  MeasurementVector<double> measurements;
  std::vector<AlgorithmRun> runs;
};

struct Score {
  bool exact_match;
  long tp;
  long fp;
  long fn;
};

Score score(const FaultPattern& truth, const FaultPattern& estimate);

/// Order-independent per-trial seed.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t grid_point, std::uint64_t trial);

/// One algorithm followed by all three pipelines.
AlgorithmRun run_algorithm(Algorithm algorithm, const FaultModeld& model,
                           const MeasurementVector<double>& y, const SolveSettings& settings,
                           bool timing);

struct SweepConfig {
  SweepParam param = SweepParam::kP;
  std::vector<double> values;
  GeneratorConfig base;
  int trials = 1000;
  std::uint64_t seed = 0;
  std::vector<Algorithm> algorithms{Algorithm::kNbp, Algorithm::kMaxProduct};
  std::vector<Pipeline> pipelines{Pipeline::kNone, Pipeline::kRound, Pipeline::kRoundLocal};
  SolveSettings settings;
  /// Zero picks the hardware concurrency.
  int workers = 0;
  /// Off keeps runtimes at zero so the CSV is reproducible byte for byte.
  bool timing = false;
  bool keep_records = false;
};

void validate(const SweepConfig& config);

struct AggregateMetrics {
  std::string param_name;
  double param_value;
  Algorithm algorithm;
  Pipeline pipeline;
  int trials;
  double wer;
  double wer_ci;
  double precision;
  double recall;
  double mean_runtime_s;
  double mean_iters;
};

struct SweepResult {
  std::vector<AggregateMetrics> rows;
  /// records[grid_point][trial] when keep_records is set.
  std::vector<std::vector<TrialRecord>> records;
};

/// Trial for grid point g and index t of the sweep.
TrialRecord run_trial(const SweepConfig& config, std::size_t grid_point, int trial);

SweepResult run_sweep(const SweepConfig& config);

/// Aggregates one (algorithm, pipeline) column over a set of trials.
AggregateMetrics aggregate(const std::vector<TrialRecord>& trials, std::size_t run_index,
                           std::size_t pipeline_index);

void write_csv(std::ostream& os, const std::vector<AggregateMetrics>& rows);

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

/// Precision and recall of soft > threshold for the given run across trials.
std::vector<PrPoint> pr_curve(const std::vector<TrialRecord>& trials, std::size_t run_index,
                              const std::vector<double>& thresholds);

}  // namespace faultbp
