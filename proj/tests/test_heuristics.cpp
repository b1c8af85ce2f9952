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

#include "faultbp/heuristics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "test_support.hpp"

using namespace faultbp;

namespace {

Vector<double> random_soft(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector<double> soft(n);
  for (Eigen::Index s = 0; s < n; ++s) soft[s] = u(rng);
  return soft;
}

// Best of the n + 1 top-k patterns, each scored from scratch.
double best_prefix_loss(const FaultModeld& model, const Vector<double>& y, const Vector<double>& soft) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(soft.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return soft[a] > soft[b]; });
  FaultPattern x = FaultPattern::Zero(soft.size());
  double best = log_loss(model, y, x);
  for (auto s : order) {
    x[s] = 1;
    best = std::min(best, log_loss(model, y, x));
  }
  return best;
}

}  // namespace

TEST(ThresholdRound, AchievesBestPrefix) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 40; ++t) {
    const auto inst = sample_instance<double>({15, 25, 0.15, 0.3, 1.0}, rng());
    const auto soft = random_soft(rng, 25);
    const auto x = threshold_round(inst.model, inst.measurements, soft);
    EXPECT_NEAR(log_loss(inst.model, inst.measurements, x),
                best_prefix_loss(inst.model, inst.measurements, soft), 1e-9);
  }
}

TEST(ThresholdRound, NeverWorseThanHalfRounding) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    const auto inst = sample_instance<double>({15, 25, 0.15, 0.3, 1.0}, rng());
    const auto soft = random_soft(rng, 25);
    EXPECT_LE(log_loss(inst.model, inst.measurements, threshold_round(inst.model, inst.measurements, soft)),
              log_loss(inst.model, inst.measurements, round_half_down(soft)) + 1e-9);
  }
}

TEST(ThresholdRound, EmptyPatternWhenNothingHelps) {
  auto model = FaultModeld::from_triplets(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}},
                                          Vector<double>::Constant(2, 0.01), 1.0);
  const Vector<double> y = Vector<double>::Zero(1);
  Vector<double> soft(2);
  soft << 0.9, 0.8;
  EXPECT_EQ(threshold_round(model, y, soft).cast<int>().sum(), 0);
}

TEST(LocalSearch, ResultIsOneOptAndNoWorse) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 40; ++t) {
    const auto inst = sample_instance<double>({20, 40, 0.15, 0.25, 1.0}, rng());
    const auto start = round_half_down(random_soft(rng, 40));
    const auto x = local_search(inst.model, inst.measurements, start);
    EXPECT_TRUE(is_one_opt(inst.model, inst.measurements, x));
    EXPECT_LE(log_loss(inst.model, inst.measurements, x),
              log_loss(inst.model, inst.measurements, start) + 1e-12);
  }
}

TEST(LocalSearch, FixedPointOnOneOptInput) {
  const auto inst = sample_instance<double>({8, 10, 0.2, 0.4, 1.0}, 9);
  const auto exact = ref::brute_force(inst.model, inst.measurements);
  const auto map = ref::to_pattern(exact.best);
  EXPECT_TRUE(local_search(inst.model, inst.measurements, map) == map);
}

TEST(LocalSearch, RejectsNonBinaryStart) {
  const auto inst = sample_instance<double>({4, 3, 0.2, 0.4, 1.0}, 1);
  FaultPattern x = FaultPattern::Zero(3);
  x[1] = 2;
  EXPECT_THROW(local_search(inst.model, inst.measurements, x), Error);
  EXPECT_THROW(local_search(inst.model, inst.measurements, FaultPattern::Zero(2)), Error);
}

TEST(OneOpt, DetectsImprovingFlip) {
  auto model = FaultModeld::from_triplets(1, 1, {{0, 0, 1.0}}, Vector<double>::Constant(1, 0.5), 1.0);
  const Vector<double> y = Vector<double>::Constant(1, 3.0);
  FaultPattern x = FaultPattern::Zero(1);
  EXPECT_FALSE(is_one_opt(model, y, x));
  x[0] = 1;
  EXPECT_TRUE(is_one_opt(model, y, x));
}

TEST(Pipeline, LossNeverIncreases) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto inst = sample_instance<double>({20, 40, 0.12, 0.2, 1.0}, rng());
    const auto soft = random_soft(rng, 40);
    const auto& y = inst.measurements;
    const double l0 = log_loss(inst.model, y, harden(inst.model, y, soft, Pipeline::kNone));
    const double l1 = log_loss(inst.model, y, harden(inst.model, y, soft, Pipeline::kRound));
    const double l2 = log_loss(inst.model, y, harden(inst.model, y, soft, Pipeline::kRoundLocal));
    EXPECT_LE(l1, l0 + 1e-9);
    EXPECT_LE(l2, l1 + 1e-9);
  }
}

TEST(Pipeline, NamesRoundTrip) {
  for (auto p : {Pipeline::kNone, Pipeline::kRound, Pipeline::kRoundLocal}) {
    EXPECT_EQ(parse_pipeline(to_string(p)), p);
  }
  EXPECT_THROW(parse_pipeline("greedy"), Error);
}
