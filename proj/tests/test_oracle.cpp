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

#include "faultbp/oracle.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace faultbp;

TEST(ExhaustiveMap, MatchesCountingOrderEnumeration) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = sample_instance<double>({8, 12, 0.12, seed % 2 ? 0.5 : 0.2, 1.0}, seed);
    const auto exact = ref::brute_force(inst.model, inst.measurements);
    const auto map = exhaustive_map(inst.model, inst.measurements);
    EXPECT_NEAR(map.loss, exact.best_loss, 1e-10);
    EXPECT_NEAR(log_loss(inst.model, inst.measurements, map.pattern), map.loss, 1e-12);
  }
}

TEST(ExhaustiveMap, TiesGoToLexicographicallySmallest) {
  // Two identical columns: (1,0) and (0,1) have equal loss.
  auto model = FaultModeld::from_triplets(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}},
                                          Vector<double>::Constant(2, 0.3), 0.5);
  const Vector<double> y = Vector<double>::Constant(1, 1.0);
  const auto map = exhaustive_map(model, y);
  EXPECT_EQ(map.pattern[0], 0);
  EXPECT_EQ(map.pattern[1], 1);
}

TEST(ExhaustiveMap, ResidualResyncOverLongRuns) {
  // 2^14 patterns crosses several resync points.
  const auto inst = sample_instance<double>({10, 14, 0.1, 0.3, 0.6}, 3);
  const auto exact = ref::brute_force(inst.model, inst.measurements);
  EXPECT_NEAR(exhaustive_map(inst.model, inst.measurements).loss, exact.best_loss, 1e-10);
}

TEST(ExactMarginals, MatchCountingOrderEnumeration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = sample_instance<double>({6, 10, 0.2, 0.4, 0.9}, seed);
    const auto exact = ref::brute_force(inst.model, inst.measurements);
    const auto m = exact_marginals(inst.model, inst.measurements);
    EXPECT_LT((m - exact.marginals).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Oracle, RefusesLargeInstances) {
  const auto inst = sample_instance<double>({5, 26, 0.1, 0.3, 1.0}, 1);
  try {
    exhaustive_map(inst.model, inst.measurements);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
  }
  const auto mid = sample_instance<double>({5, 21, 0.1, 0.3, 1.0}, 1);
  EXPECT_THROW(exact_marginals(mid.model, mid.measurements), Error);
}
