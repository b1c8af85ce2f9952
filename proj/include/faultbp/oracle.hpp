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

// Exhaustive enumeration over all 2^n fault patterns for small n.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "faultbp/error.hpp"
#include "faultbp/heuristics.hpp"
#include "faultbp/model.hpp"

namespace faultbp {

inline constexpr Eigen::Index kMaxMapFaults = 25;
inline constexpr Eigen::Index kMaxMarginalFaults = 20;

template <typename Scalar = double>
struct MapEstimate {
  FaultPattern pattern;
  Scalar loss;
};

namespace detail {

/// Calls visit(x, loss) for every pattern in Gray-code order. The residual is
/// updated one column per step and rebuilt every 4096 steps to bound drift.
template <typename Scalar, typename Visit>
void enumerate_patterns(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                        Visit&& visit) {
  const Eigen::Index n = model.faults();
  FaultPattern x = FaultPattern::Zero(n);
  Vector<Scalar> residual = y;
  const Scalar inv2var = Scalar(1) / (Scalar(2) * model.noise_variance());
  Scalar prior = 0;
  visit(x, residual.squaredNorm() * inv2var);
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t step = 1; step < count; ++step) {
    const auto s = static_cast<Eigen::Index>(std::countr_zero(step));
    prior += x[s] == 0 ? model.log_odds()[s] : -model.log_odds()[s];
    apply_flip(model, residual, x, s);
    if ((step & 4095U) == 0) {
      residual = y - model.by_column() * as_real<Scalar>(x);
      prior = model.log_odds().dot(as_real<Scalar>(x));
    }
    visit(x, prior + residual.squaredNorm() * inv2var);
  }
}

inline bool lexicographically_less(const FaultPattern& a, const FaultPattern& b) {
  for (Eigen::Index s = 0; s < a.size(); ++s) {
    if (a[s] != b[s]) return a[s] < b[s];
  }
  return false;
}

}  // namespace detail

/// Minimum-loss pattern by enumeration; equal losses resolve to the
/// lexicographically smallest pattern.
template <typename Scalar>
MapEstimate<Scalar> exhaustive_map(const FaultModel<Scalar>& model,
                                   const MeasurementVector<Scalar>& y) {
  check_dimensions(model, y);
  require(model.faults() <= kMaxMapFaults, ErrorCode::kTooLarge,
          "exhaustive search is limited to " + std::to_string(kMaxMapFaults) + " faults");
  MapEstimate<Scalar> best{FaultPattern(), std::numeric_limits<Scalar>::infinity()};
  detail::enumerate_patterns(model, y, [&](const FaultPattern& x, Scalar loss) {
    if (loss < best.loss ||
        (loss == best.loss && detail::lexicographically_less(x, best.pattern))) {
      best.pattern = x;
      best.loss = loss;
    }
  });
  best.loss = log_loss(model, y, best.pattern);
  return best;
}

/// P(x_s = 1 | y) by normalizing exp(-loss) over all patterns.
template <typename Scalar>
Vector<Scalar> exact_marginals(const FaultModel<Scalar>& model,
                               const MeasurementVector<Scalar>& y) {
  check_dimensions(model, y);
  require(model.faults() <= kMaxMarginalFaults, ErrorCode::kTooLarge,
          "exact marginals are limited to " + std::to_string(kMaxMarginalFaults) + " faults");
  const Eigen::Index n = model.faults();
  std::vector<Scalar> losses;
  std::vector<std::uint32_t> codes;
  losses.reserve(std::size_t{1} << n);
  codes.reserve(std::size_t{1} << n);
  Scalar lowest = std::numeric_limits<Scalar>::infinity();
  detail::enumerate_patterns(model, y, [&](const FaultPattern& x, Scalar loss) {
    std::uint32_t code = 0;
    for (Eigen::Index s = 0; s < n; ++s) code |= std::uint32_t{x[s]} << s;
    codes.push_back(code);
    losses.push_back(loss);
    lowest = std::min(lowest, loss);
  });
  Vector<Scalar> ones = Vector<Scalar>::Zero(n);
  Scalar total = 0;
  for (std::size_t k = 0; k < losses.size(); ++k) {
    const Scalar w = std::exp(lowest - losses[k]);
    total += w;
    for (Eigen::Index s = 0; s < n; ++s) {
      if ((codes[k] >> s) & 1U) ones[s] += w;
    }
  }
  return ones / total;
}

}  // namespace faultbp
