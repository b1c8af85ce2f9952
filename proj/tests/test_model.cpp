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

#include "faultbp/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace faultbp;

namespace {

FaultModeld scalar_model(double a, double p, double sigma) {
  return FaultModeld::from_triplets(1, 1, {{0, 0, a}}, Vector<double>::Constant(1, p), sigma);
}

FaultPattern pattern(std::initializer_list<int> bits) {
  FaultPattern x(static_cast<Eigen::Index>(bits.size()));
  Eigen::Index k = 0;
  for (int b : bits) x[k++] = static_cast<std::uint8_t>(b);
  return x;
}

}  // namespace

TEST(LogLoss, SingleFaultByHand) {
  const auto model = scalar_model(1.0, 0.1, 1.0);
  const Vector<double> y = Vector<double>::Constant(1, 1.0);
  // x = 1 pays log 9 in prior and nothing in residual; x = 0 pays 1/2.
  const double gap = log_loss(model, y, pattern({1})) - log_loss(model, y, pattern({0}));
  EXPECT_NEAR(gap, std::log(9.0) - 0.5, 1e-12);
  EXPECT_NEAR(gap, 1.6972, 1e-4);
  EXPECT_LT(log_loss(model, y, pattern({0})), log_loss(model, y, pattern({1})));
}

TEST(LogLoss, MatchesDenseDefinition) {
  GeneratorConfig cfg{7, 9, 0.2, 0.4, 0.8};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = sample_instance<double>(cfg, seed);
    const Eigen::MatrixXd a(inst.model.by_column());
    std::mt19937_64 rng(seed);
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd x = ref::bits(rng() & 511U, 9);
      EXPECT_NEAR(log_loss(inst.model, inst.measurements, ref::to_pattern(x)),
                  ref::naive_loss(a, inst.model.priors(), 0.8, inst.measurements, x), 1e-10);
    }
  }
}

TEST(LogLoss, RejectsWrongLengths) {
  const auto model = scalar_model(1.0, 0.1, 1.0);
  EXPECT_THROW(log_loss(model, Vector<double>(Vector<double>::Zero(2)), pattern({0})), Error);
  EXPECT_THROW(log_loss(model, Vector<double>(Vector<double>::Zero(1)), pattern({0, 1})), Error);
}

TEST(FaultModel, ValidatesInputs) {
  EXPECT_THROW(scalar_model(1.0, 0.0, 1.0), Error);
  EXPECT_THROW(scalar_model(1.0, 1.0, 1.0), Error);
  EXPECT_THROW(scalar_model(1.0, 0.5, 0.0), Error);
  EXPECT_THROW(FaultModeld::from_triplets(1, 1, {{1, 0, 1.0}}, Vector<double>::Constant(1, 0.1), 1),
               Error);
  EXPECT_THROW(FaultModeld::from_triplets(2, 2, {}, Vector<double>::Constant(3, 0.1), 1), Error);
  try {
    scalar_model(1.0, 0.5, -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(FaultModel, PrunesExplicitZeros) {
  auto model = FaultModeld::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 0.0}, {1, 0, -1.0}},
                                          Vector<double>::Constant(2, 0.2), 1.0);
  EXPECT_EQ(model.by_column().nonZeros(), 2);
  EXPECT_EQ(model.by_row().nonZeros(), 2);
  EXPECT_DOUBLE_EQ(model.fill(), 0.5);
}

TEST(FaultModel, WithPriorsKeepsSignatures) {
  const auto inst = sample_instance<double>({5, 6, 0.1, 0.5, 1.0}, 3);
  const auto other = inst.model.with_priors(Vector<double>::Constant(6, 0.3));
  EXPECT_TRUE(Eigen::MatrixXd(other.by_column()).isApprox(Eigen::MatrixXd(inst.model.by_column())));
  EXPECT_NEAR(other.log_odds()[0], std::log(0.7 / 0.3), 1e-14);
}

TEST(Pairwise, EnergyDifferencesEqualLossDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = sample_instance<double>({6, 10, 0.15, 0.4, 0.7}, seed);
    const auto pm = to_pairwise(inst.model, inst.measurements);
    const FaultPattern zero = FaultPattern::Zero(10);
    const double base_loss = log_loss(inst.model, inst.measurements, zero);
    const double base_energy = pairwise_energy(pm, zero);
    for (std::uint64_t code = 0; code < 1024; code += 37) {
      const auto x = ref::to_pattern(ref::bits(code, 10));
      EXPECT_NEAR(log_loss(inst.model, inst.measurements, x) - base_loss,
                  pairwise_energy(pm, x) - base_energy, 1e-9);
    }
  }
}

TEST(Pairwise, CouplingIsSymmetricWithoutDiagonal) {
  const auto inst = sample_instance<double>({8, 12, 0.1, 0.5, 1.0}, 11);
  const auto pm = to_pairwise(inst.model, inst.measurements);
  const Eigen::MatrixXd j(pm.coupling);
  EXPECT_TRUE(j.isApprox(j.transpose()));
  EXPECT_EQ(j.diagonal().cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd a(inst.model.by_column());
  const Eigen::MatrixXd gram = a.transpose() * a;
  for (int s = 0; s < 12; ++s) {
    for (int t = 0; t < 12; ++t) {
      if (s != t) {
        EXPECT_DOUBLE_EQ(j(s, t), gram(s, t));
      }
    }
  }
}

TEST(Bipolar, ResidualIsPreserved) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = sample_instance<double>({6, 8, 0.3, 0.5, 1.0}, rng());
    Eigen::VectorXi xb(8);
    for (int s = 0; s < 8; ++s) xb[s] = (rng() & 1U) ? 1 : -1;
    const auto bin = bipolar_to_binary(xb, inst.model.by_column(), inst.measurements);
    const Eigen::VectorXd lhs = inst.measurements - inst.model.by_column() * xb.cast<double>();
    const Eigen::VectorXd rhs = bin.measurements - bin.signatures * as_real<double>(bin.pattern);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    for (int s = 0; s < 8; ++s) EXPECT_EQ(bin.pattern[s], xb[s] == 1 ? 1 : 0);
  }
}

TEST(Bipolar, RejectsNonBipolarEntries) {
  const auto inst = sample_instance<double>({3, 2, 0.3, 0.5, 1.0}, 1);
  Eigen::VectorXi xb(2);
  xb << 1, 0;
  EXPECT_THROW(bipolar_to_binary(xb, inst.model.by_column(), inst.measurements), Error);
}

TEST(Generator, SameSeedSameInstance) {
  const GeneratorConfig cfg{20, 30, 0.1, 0.3, 1.0};
  const auto a = sample_instance<double>(cfg, 42);
  const auto b = sample_instance<double>(cfg, 42);
  EXPECT_TRUE(Eigen::MatrixXd(a.model.by_column()) == Eigen::MatrixXd(b.model.by_column()));
  EXPECT_TRUE(a.truth == b.truth);
  EXPECT_TRUE(a.measurements == b.measurements);
  const auto c = sample_instance<double>(cfg, 43);
  EXPECT_FALSE(a.measurements == c.measurements);
}

TEST(Generator, EntryStatistics) {
  const GeneratorConfig cfg{100, 200, 0.12, 0.2, 1.0};
  long nonzero = 0;
  long positive = 0;
  long faults = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = sample_instance<double>(cfg, seed);
    const auto& a = inst.model.by_column();
    nonzero += a.nonZeros();
    for (int k = 0; k < a.outerSize(); ++k) {
      for (SparseByColumn<double>::InnerIterator it(a, k); it; ++it) {
        EXPECT_EQ(std::abs(it.value()), 1.0);
        positive += it.value() > 0;
      }
    }
    faults += inst.truth.cast<long>().sum();
    EXPECT_TRUE(is_binary(inst.truth));
  }
  // Binomial counts; 5 standard deviations.
  const double cells = 10.0 * 100 * 200;
  EXPECT_NEAR(nonzero / cells, 0.2, 5 * std::sqrt(0.2 * 0.8 / cells));
  EXPECT_NEAR(double(positive) / nonzero, 0.5, 5 * std::sqrt(0.25 / nonzero));
  EXPECT_NEAR(faults / 2000.0, 0.12, 5 * std::sqrt(0.12 * 0.88 / 2000.0));
}

TEST(Generator, NoiseHasRequestedSpread) {
  const GeneratorConfig cfg{200, 50, 0.1, 0.2, 0.5};
  double sum2 = 0;
  long count = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = sample_instance<double>(cfg, seed);
    const Eigen::VectorXd r =
        inst.measurements - inst.model.by_column() * as_real<double>(inst.truth);
    sum2 += r.squaredNorm();
    count += r.size();
  }
  EXPECT_NEAR(std::sqrt(sum2 / count), 0.5, 0.02);
}

TEST(Generator, RejectsBadConfig) {
  EXPECT_THROW(sample_instance<double>({0, 5, 0.1, 0.2, 1.0}, 1), Error);
  EXPECT_THROW(sample_instance<double>({5, 5, 1.5, 0.2, 1.0}, 1), Error);
  EXPECT_THROW(sample_instance<double>({5, 5, 0.1, 0.0, 1.0}, 1), Error);
  EXPECT_THROW(sample_instance<double>({5, 5, 0.1, 0.2, -1.0}, 1), Error);
}

TEST(Rounding, HalfGoesDown) {
  Vector<double> soft(4);
  soft << 0.2, 0.5, 0.5000001, 1.0;
  EXPECT_TRUE(round_half_down(soft) == pattern({0, 0, 1, 1}));
}
