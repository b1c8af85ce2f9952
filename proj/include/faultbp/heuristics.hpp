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

// Turning soft decisions into hard fault patterns: variable threshold
// rounding followed by a 1-OPT bit-flip search. Both work on the cached
// residual r = y - A x so that one flip costs O(column non-zeros).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "faultbp/error.hpp"
#include "faultbp/model.hpp"

namespace faultbp {

namespace detail {

/// Loss change of flipping bit s given the residual r = y - A x.
template <typename Scalar>
Scalar flip_delta(const FaultModel<Scalar>& model, const Vector<Scalar>& residual,
                  const FaultPattern& x, Eigen::Index s) {
  const auto& a = model.by_column();
  Scalar norm2 = 0;
  Scalar dot = 0;
  for (typename SparseByColumn<Scalar>::InnerIterator it(a, s); it; ++it) {
    norm2 += it.value() * it.value();
    dot += it.value() * residual[it.row()];
  }
  const Scalar inv2var = Scalar(1) / (Scalar(2) * model.noise_variance());
  // 0 -> 1: r becomes r - a_s;  1 -> 0: r becomes r + a_s.
  return x[s] == 0 ? model.log_odds()[s] + (norm2 - Scalar(2) * dot) * inv2var
                   : -model.log_odds()[s] + (norm2 + Scalar(2) * dot) * inv2var;
}

template <typename Scalar>
void apply_flip(const FaultModel<Scalar>& model, Vector<Scalar>& residual, FaultPattern& x,
                Eigen::Index s) {
  const Scalar sign = x[s] == 0 ? Scalar(-1) : Scalar(1);
  for (typename SparseByColumn<Scalar>::InnerIterator it(model.by_column(), s); it; ++it) {
    residual[it.row()] += sign * it.value();
  }
  x[s] = x[s] == 0 ? 1 : 0;
}

template <typename Scalar>
void check_soft(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                Eigen::Index length) {
  check_dimensions(model, y);
  require(length == model.faults(), ErrorCode::kDimensionMismatch,
          "decision length " + std::to_string(length) + " != " + std::to_string(model.faults()));
}

}  // namespace detail

/// Sweeps the n + 1 patterns that switch on the k largest soft values
/// (k = 0..n, equal values in index order) and returns the one of least loss.
template <typename Scalar>
FaultPattern threshold_round(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                             const SoftDecision<Scalar>& soft) {
  detail::check_soft(model, y, soft.size());
  const Eigen::Index n = soft.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return soft[a] > soft[b]; });

  FaultPattern x = FaultPattern::Zero(n);
  Vector<Scalar> residual = y;
  Scalar loss = residual.squaredNorm() / (Scalar(2) * model.noise_variance());
  Scalar best_loss = loss;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Eigen::Index s = order[k];
    loss += detail::flip_delta(model, residual, x, s);
    detail::apply_flip(model, residual, x, s);
    if (loss < best_loss) {
      best_loss = loss;
      best_k = k + 1;
    }
  }
  FaultPattern best = FaultPattern::Zero(n);
  for (std::size_t k = 0; k < best_k; ++k) best[order[k]] = 1;
  return best;
}

/// Cyclic single-bit flips, accepting strict improvements, until a full pass
/// changes nothing. The result is 1-OPT.
template <typename Scalar>
FaultPattern local_search(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                          FaultPattern x) {
  detail::check_soft(model, y, x.size());
  require(is_binary(x), ErrorCode::kInvalidArgument, "start pattern is not binary");
  const Eigen::Index n = x.size();
  Vector<Scalar> residual = y - model.by_column() * as_real<Scalar>(x);
  // Improvements below this are rounding noise of the cached residual.
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                       (Scalar(1) + residual.squaredNorm() / model.noise_variance() +
                        model.log_odds().cwiseAbs().sum());
  const long cap = 100L * static_cast<long>(n);
  long flips = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (detail::flip_delta(model, residual, x, s) < -slack) {
        detail::apply_flip(model, residual, x, s);
        changed = true;
        require(++flips <= cap, ErrorCode::kNotConverged,
                "local search exceeded " + std::to_string(cap) + " flips");
      }
    }
  }
  return x;
}

/// True when no single-bit flip lowers the loss by more than `tolerance`.
template <typename Scalar>
bool is_one_opt(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                const FaultPattern& x, Scalar tolerance = Scalar(1e-9)) {
  const Scalar base = log_loss(model, y, x);
  FaultPattern probe = x;
  for (Eigen::Index s = 0; s < x.size(); ++s) {
    probe[s] = probe[s] == 0 ? 1 : 0;
    const Scalar flipped = log_loss(model, y, probe);
    probe[s] = x[s];
    if (flipped < base - tolerance * std::max(Scalar(1), std::abs(base))) return false;
  }
  return true;
}

enum class Pipeline { kNone, kRound, kRoundLocal };

inline const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::kNone: return "none";
    case Pipeline::kRound: return "round";
    case Pipeline::kRoundLocal: return "round+local";
  }
  return "none";
}

inline Pipeline parse_pipeline(const std::string& name) {
  if (name == "none") return Pipeline::kNone;
  if (name == "round") return Pipeline::kRound;
  if (name == "round+local") return Pipeline::kRoundLocal;
  throw Error(ErrorCode::kInvalidArgument, "unknown pipeline '" + name + "'");
}

/// Hard decision from a soft one: `none` rounds at 1/2 (ties to 0).
template <typename Scalar>
FaultPattern harden(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                    const SoftDecision<Scalar>& soft, Pipeline pipeline) {
  detail::check_soft(model, y, soft.size());
  if (pipeline == Pipeline::kNone) return round_half_down(soft);
  FaultPattern x = threshold_round(model, y, soft);
  if (pipeline == Pipeline::kRound) return x;
  return local_search(model, y, std::move(x));
}

}  // namespace faultbp
