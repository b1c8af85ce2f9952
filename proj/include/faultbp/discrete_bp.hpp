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

// Max-product and sum-product BP on the pairwise binary model with edge
// potentials exp(-J_st x_s x_t) and local potentials exp(-h_s x_s).
//
// A binary message is carried as its log-ratio l = log m(1) - log m(0).
// With R = -h_s + sum of incoming log-ratios except the target's, the update
// toward t is
//   max-product: l = max(0, R - J) - max(0, R)
//   sum-product: l = softplus(R - J) - softplus(R)

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "faultbp/error.hpp"
#include "faultbp/model.hpp"

namespace faultbp {

/// Normalized two-point message (values at x = 0 and x = 1).
template <typename Scalar = double>
struct BinaryMessage {
  Scalar zero;
  Scalar one;

  static BinaryMessage from_log_ratio(Scalar l) {
    const Scalar one = Scalar(1) / (Scalar(1) + std::exp(-l));
    return {Scalar(1) - one, one};
  }
};

enum class Semiring { kMaxProduct, kSumProduct };

template <typename Scalar = double>
struct DiscreteBpConfig {
  int max_iters = 50;
  Scalar tolerance = Scalar(1e-5);
  /// Weight kept from the previous log-ratio.
  Scalar damping = Scalar(0);
};

template <typename Scalar = double>
struct DiscreteBpResult {
  /// Belief b_s(1) / (b_s(0) + b_s(1)).
  SoftDecision<Scalar> soft;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

template <typename Scalar>
Scalar softplus(Scalar x) {
  return x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar logistic(Scalar x) {
  return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-x))
                        : std::exp(x) / (Scalar(1) + std::exp(x));
}

}  // namespace detail

template <typename Scalar>
DiscreteBpResult<Scalar> discrete_bp(const PairwiseModel<Scalar>& pm, Semiring semiring,
                                     const DiscreteBpConfig<Scalar>& config) {
  require(config.max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be at least 1");
  require(config.tolerance > Scalar(0), ErrorCode::kInvalidArgument, "tolerance must be positive");
  require(config.damping >= Scalar(0) && config.damping < Scalar(1), ErrorCode::kInvalidArgument,
          "damping must lie in [0,1)");
  const auto& j = pm.coupling;
  const Eigen::Index n = pm.size();
  require(j.rows() == n && j.cols() == n, ErrorCode::kDimensionMismatch,
          "coupling matrix must be n x n");

  // Directed edge k = stored entry (t, s) of column s carries the message s -> t.
  // reverse[k] is the slot of t -> s.
  const auto nnz = static_cast<std::size_t>(j.nonZeros());
  std::vector<int> target(nnz);
  std::vector<int> reverse(nnz);
  {
    const int* outer = j.outerIndexPtr();
    const int* inner = j.innerIndexPtr();
    for (Eigen::Index s = 0; s < n; ++s) {
      for (int k = outer[s]; k < outer[s + 1]; ++k) {
        const int t = inner[k];
        target[static_cast<std::size_t>(k)] = t;
        const int* begin = inner + outer[t];
        const int* end = inner + outer[t + 1];
        const int* hit = std::lower_bound(begin, end, static_cast<int>(s));
        require(hit != end && *hit == s, ErrorCode::kInvalidArgument,
                "coupling matrix is not structurally symmetric");
        reverse[static_cast<std::size_t>(k)] = static_cast<int>(hit - inner);
      }
    }
  }

  const Scalar* coupling = j.valuePtr();
  const int* outer = j.outerIndexPtr();
  Vector<Scalar> messages = Vector<Scalar>::Zero(static_cast<Eigen::Index>(nnz));
  Vector<Scalar> next(static_cast<Eigen::Index>(nnz));
  Vector<Scalar> incoming(n);
  SoftDecision<Scalar> belief(n);
  SoftDecision<Scalar> previous;

  auto update_incoming = [&] {
    incoming = -pm.field;
    for (std::size_t k = 0; k < nnz; ++k) incoming[target[k]] += messages[static_cast<Eigen::Index>(k)];
  };

  DiscreteBpResult<Scalar> result;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    update_incoming();
    for (Eigen::Index s = 0; s < n; ++s) {
      for (int k = outer[s]; k < outer[s + 1]; ++k) {
        const Scalar r = incoming[s] - messages[reverse[static_cast<std::size_t>(k)]];
        const Scalar c = coupling[k];
        Scalar l = semiring == Semiring::kMaxProduct
                       ? std::max(Scalar(0), r - c) - std::max(Scalar(0), r)
                       : detail::softplus(r - c) - detail::softplus(r);
        if (config.damping > Scalar(0)) l = (Scalar(1) - config.damping) * l + config.damping * messages[k];
        next[k] = l;
      }
    }
    messages.swap(next);
    update_incoming();
    for (Eigen::Index s = 0; s < n; ++s) belief[s] = detail::logistic(incoming[s]);
    result.iterations = iter;
    if (previous.size() != 0) {
      const Scalar base = std::max(previous.norm(), std::numeric_limits<Scalar>::min());
      if ((belief - previous).norm() / base < config.tolerance) {
        result.converged = true;
        break;
      }
    }
    previous = belief;
  }
  result.soft = belief;
  return result;
}

template <typename Scalar>
DiscreteBpResult<Scalar> maxprod_solve(const PairwiseModel<Scalar>& pm,
                                       const DiscreteBpConfig<Scalar>& config = {}) {
  return discrete_bp(pm, Semiring::kMaxProduct, config);
}

template <typename Scalar>
DiscreteBpResult<Scalar> sumprod_solve(const PairwiseModel<Scalar>& pm,
                                       const DiscreteBpConfig<Scalar>& config = {}) {
  return discrete_bp(pm, Semiring::kSumProduct, config);
}

}  // namespace faultbp
