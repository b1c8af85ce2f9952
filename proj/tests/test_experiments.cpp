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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace faultbp;

namespace {

FaultPattern pattern(std::initializer_list<int> bits) {
  FaultPattern x(static_cast<Eigen::Index>(bits.size()));
  Eigen::Index k = 0;
  for (int b : bits) x[k++] = static_cast<std::uint8_t>(b);
  return x;
}

SweepConfig small_sweep() {
  SweepConfig c;
  c.param = SweepParam::kP;
  c.values = {0.05, 0.2};
  c.base = GeneratorConfig{10, 16, 0.1, 0.3, 1.0};
  c.trials = 6;
  c.seed = 99;
  c.algorithms = {Algorithm::kNbp, Algorithm::kMaxProduct, Algorithm::kOracle};
  c.settings.nbp.bins = 128;
  c.workers = 1;
  return c;
}

std::string csv_of(const SweepConfig& c) {
  std::ostringstream os;
  write_csv(os, run_sweep(c).rows);
  return os.str();
}

}  // namespace

TEST(Score, ExactAndSwapped) {
  const Score same = score(pattern({1, 0, 1}), pattern({1, 0, 1}));
  EXPECT_TRUE(same.exact_match);
  EXPECT_EQ(same.tp, 2);
  EXPECT_EQ(same.fp, 0);
  EXPECT_EQ(same.fn, 0);
  const Score swapped = score(pattern({1, 0}), pattern({0, 1}));
  EXPECT_FALSE(swapped.exact_match);
  EXPECT_EQ(swapped.tp, 0);
  EXPECT_EQ(swapped.fp, 1);
  EXPECT_EQ(swapped.fn, 1);
  EXPECT_THROW(score(pattern({1}), pattern({1, 0})), Error);
}

TEST(TrialSeed, DistinctAcrossGridAndTrials) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t g = 0; g < 20; ++g) {
    for (std::uint64_t t = 0; t < 200; ++t) seen.insert(trial_seed(7, g, t));
  }
  EXPECT_EQ(seen.size(), 4000U);
  EXPECT_NE(trial_seed(7, 0, 1), trial_seed(8, 0, 1));
  EXPECT_NE(trial_seed(7, 1, 0), trial_seed(7, 0, 1));
}

TEST(Aggregate, RatesAndConventions) {
  std::vector<TrialRecord> trials;
  auto add = [&](FaultPattern truth, FaultPattern estimate, int iters) {
    AlgorithmRun run;
    run.algorithm = Algorithm::kNbp;
    run.soft = as_real<double>(estimate);
    run.patterns = {estimate, estimate, estimate};
    run.losses = {0, 0, 0};
    run.iterations = iters;
    trials.push_back(TrialRecord{0, {}, std::move(truth), Vector<double>(), {run}});
  };
  add(pattern({1, 0, 0}), pattern({1, 0, 0}), 4);
  add(pattern({0, 1, 0}), pattern({0, 1, 1}), 6);
  add(pattern({0, 0, 1}), pattern({0, 0, 0}), 8);
  add(pattern({0, 0, 0}), pattern({0, 0, 0}), 2);
  const auto m = aggregate(trials, 0, 2);
  EXPECT_EQ(m.trials, 4);
  EXPECT_DOUBLE_EQ(m.wer, 0.5);
  EXPECT_DOUBLE_EQ(m.wer_ci, 1.96 * std::sqrt(0.25 / 4));
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.mean_iters, 5.0);
  EXPECT_EQ(m.pipeline, Pipeline::kRoundLocal);

  std::vector<TrialRecord> empty_truth(trials.end() - 1, trials.end());
  const auto e = aggregate(empty_truth, 0, 0);
  EXPECT_DOUBLE_EQ(e.precision, 1.0);
  EXPECT_DOUBLE_EQ(e.recall, 1.0);
  EXPECT_DOUBLE_EQ(e.wer, 0.0);
  EXPECT_DOUBLE_EQ(e.wer_ci, 0.0);
}

TEST(RunTrial, PipelinesAreLossMonotone) {
  const auto c = small_sweep();
  for (int t = 0; t < 6; ++t) {
    const auto rec = run_trial(c, 1, t);
    ASSERT_EQ(rec.runs.size(), 3U);
    for (const auto& run : rec.runs) {
      ASSERT_EQ(run.losses.size(), 3U);
      EXPECT_LE(run.losses[1], run.losses[0] + 1e-9);
      EXPECT_LE(run.losses[2], run.losses[1] + 1e-9);
      EXPECT_TRUE(std::isfinite(run.losses[2]));
      EXPECT_EQ(run.runtime_s, 0.0);
    }
    // Nothing beats the oracle.
    EXPECT_LE(rec.runs[2].losses[0], rec.runs[0].losses[2] + 1e-9);
    EXPECT_LE(rec.runs[2].losses[0], rec.runs[1].losses[2] + 1e-9);
  }
}

TEST(RunTrial, ReportedPriorOnlyChangesTheSolver) {
  auto c = small_sweep();
  c.param = SweepParam::kReportedP;
  c.values = {0.3};
  c.algorithms = {Algorithm::kOracle};
  const auto rec = run_trial(c, 0, 0);
  EXPECT_DOUBLE_EQ(rec.config.p, 0.1);
  const auto inst = sample_instance<double>(rec.config, rec.seed);
  EXPECT_TRUE(inst.truth == rec.truth);
  const auto mismatched = inst.model.with_priors(Vector<double>::Constant(16, 0.3));
  EXPECT_NEAR(rec.runs[0].losses[0], log_loss(mismatched, inst.measurements, rec.runs[0].patterns[0]),
              1e-12);
}

TEST(RunSweep, RowsInGridAlgorithmPipelineOrder) {
  const auto result = run_sweep(small_sweep());
  ASSERT_EQ(result.rows.size(), 2U * 3U * 3U);
  EXPECT_EQ(result.rows[0].param_value, 0.05);
  EXPECT_EQ(result.rows[0].algorithm, Algorithm::kNbp);
  EXPECT_EQ(result.rows[1].pipeline, Pipeline::kRound);
  EXPECT_EQ(result.rows[3].algorithm, Algorithm::kMaxProduct);
  EXPECT_EQ(result.rows[9].param_value, 0.2);
  for (const auto& r : result.rows) {
    EXPECT_EQ(r.param_name, "p");
    EXPECT_GE(r.wer, 0.0);
    EXPECT_LE(r.wer, 1.0);
    EXPECT_GE(r.precision, 0.0);
    EXPECT_LE(r.precision, 1.0);
    EXPECT_GE(r.recall, 0.0);
    EXPECT_LE(r.recall, 1.0);
  }
}

TEST(RunSweep, CsvIndependentOfWorkerCount) {
  auto c = small_sweep();
  const std::string one = csv_of(c);
  c.workers = 3;
  EXPECT_EQ(csv_of(c), one);
  EXPECT_EQ(csv_of(c), one);
  c.seed = 100;
  EXPECT_NE(csv_of(c), one);
}

TEST(RunSweep, BinsParameterReachesTheSolver) {
  auto c = small_sweep();
  c.param = SweepParam::kBins;
  c.values = {16, 256};
  c.algorithms = {Algorithm::kNbp};
  c.keep_records = true;
  const auto r = run_sweep(c);
  ASSERT_EQ(r.records.size(), 2U);
  EXPECT_EQ(r.records[0].size(), 6U);
  const auto& coarse = r.records[0][0].runs[0].soft;
  const auto& fine = r.records[1][0].runs[0].soft;
  EXPECT_GT((coarse - fine).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(r.rows.front().param_name, "bins");
}

TEST(RunSweep, RejectsInvalidGrids) {
  auto c = small_sweep();
  c.values.clear();
  EXPECT_THROW(run_sweep(c), Error);
  c = small_sweep();
  c.values = {1.5};
  EXPECT_THROW(run_sweep(c), Error);
  c = small_sweep();
  c.param = SweepParam::kBins;
  c.values = {4};
  EXPECT_THROW(run_sweep(c), Error);
  c = small_sweep();
  c.trials = 0;
  EXPECT_THROW(run_sweep(c), Error);
}

TEST(RunSweep, SolverErrorsPropagate) {
  auto c = small_sweep();
  c.base.n = 30;
  c.algorithms = {Algorithm::kOracle};
  c.workers = 2;
  try {
    run_sweep(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }
}

TEST(PrCurve, EndpointsAndMonotoneRecall) {
  auto c = small_sweep();
  c.values = {0.2};
  c.algorithms = {Algorithm::kMaxProduct};
  c.keep_records = true;
  const auto r = run_sweep(c);
  const auto curve = pr_curve(r.records[0], 0, {-1.0, 0.25, 0.5, 0.75, 1.0});
  ASSERT_EQ(curve.size(), 5U);
  EXPECT_DOUBLE_EQ(curve.front().recall, 1.0);
  // Nothing is declared above 1, so precision takes its empty-set value.
  EXPECT_DOUBLE_EQ(curve.back().precision, 1.0);
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_LE(curve[k].recall, curve[k - 1].recall);
}

TEST(Names, RoundTrip) {
  for (auto a : {Algorithm::kNbp, Algorithm::kMaxProduct, Algorithm::kSumProduct, Algorithm::kOracle}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  for (auto p : {SweepParam::kP, SweepParam::kQ, SweepParam::kSigma, SweepParam::kReportedP,
                 SweepParam::kBins}) {
    EXPECT_EQ(parse_sweep_param(to_string(p)), p);
  }
  EXPECT_THROW(parse_algorithm("lp"), Error);
  EXPECT_THROW(parse_sweep_param("m"), Error);
}
