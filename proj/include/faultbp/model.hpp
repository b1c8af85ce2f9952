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

// Problem instances for binary fault identification: y = A x + v with
// x in {0,1}^n, independent Bernoulli(p_s) faults and N(0, sigma^2) noise.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "faultbp/error.hpp"

namespace faultbp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Binary fault indicator per possible fault; entries are 0 or 1.
using FaultPattern = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

template <typename Scalar>
using MeasurementVector = Vector<Scalar>;

/// Real-valued relaxation of a fault pattern (beliefs, relaxation optima).
template <typename Scalar>
using SoftDecision = Vector<Scalar>;

template <typename Scalar>
using SparseByColumn = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;
template <typename Scalar>
using SparseByRow = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

inline bool is_binary(const FaultPattern& x) {
  return (x.array() <= std::uint8_t{1}).all();
}

/// Rounds a soft decision at 1/2; exactly 1/2 goes to no-fault.
template <typename Scalar>
FaultPattern round_half_down(const SoftDecision<Scalar>& soft) {
  FaultPattern x(soft.size());
  for (Eigen::Index s = 0; s < soft.size(); ++s) x[s] = soft[s] > Scalar(0.5) ? 1 : 0;
  return x;
}

/// Fault signature matrix, per-fault priors and noise level.
///
/// The matrix is held twice, column-major for per-fault signatures a_s and
/// row-major for per-measurement rows; both views are built once here and
/// never mutated. Explicit zeros are pruned so the stored pattern is exactly
/// the set of non-zero signature entries.
template <typename Scalar = double>
class FaultModel {
 public:
  FaultModel(SparseByColumn<Scalar> signatures, Vector<Scalar> priors, Scalar noise_std)
      : columns_(std::move(signatures)), priors_(std::move(priors)), noise_std_(noise_std) {
    require(columns_.rows() >= 1 && columns_.cols() >= 1, ErrorCode::kInvalidArgument,
            "signature matrix must have at least one row and one column");
    require(priors_.size() == columns_.cols(), ErrorCode::kDimensionMismatch,
            "prior vector length " + std::to_string(priors_.size()) + " != fault count " +
                std::to_string(columns_.cols()));
    require(std::isfinite(noise_std_) && noise_std_ > Scalar(0), ErrorCode::kInvalidArgument,
            "noise standard deviation must be positive");
    for (Eigen::Index s = 0; s < priors_.size(); ++s) {
      require(priors_[s] > Scalar(0) && priors_[s] < Scalar(1), ErrorCode::kInvalidArgument,
              "fault prior " + std::to_string(s) + " outside (0,1)");
    }
    columns_.prune(Scalar(0));
    columns_.makeCompressed();
    for (int k = 0; k < columns_.outerSize(); ++k) {
      for (typename SparseByColumn<Scalar>::InnerIterator it(columns_, k); it; ++it) {
        require(std::isfinite(it.value()), ErrorCode::kInvalidArgument,
                "signature matrix has a non-finite entry");
      }
    }
    rows_ = SparseByRow<Scalar>(columns_);
    rows_.makeCompressed();
    log_odds_ = ((Scalar(1) - priors_.array()) / priors_.array()).log().matrix();
  }

  static FaultModel from_triplets(Eigen::Index m, Eigen::Index n,
                                  const std::vector<Eigen::Triplet<Scalar>>& entries,
                                  Vector<Scalar> priors, Scalar noise_std) {
    require(m >= 1 && n >= 1, ErrorCode::kInvalidArgument, "m and n must be positive");
    for (const auto& t : entries) {
      require(t.row() >= 0 && t.row() < m && t.col() >= 0 && t.col() < n,
              ErrorCode::kDimensionMismatch, "signature entry index out of range");
    }
    SparseByColumn<Scalar> a(m, n);
    a.setFromTriplets(entries.begin(), entries.end());
    return FaultModel(std::move(a), std::move(priors), noise_std);
  }

  Eigen::Index measurements() const { return columns_.rows(); }
  Eigen::Index faults() const { return columns_.cols(); }

  const SparseByColumn<Scalar>& by_column() const { return columns_; }
  const SparseByRow<Scalar>& by_row() const { return rows_; }

  const Vector<Scalar>& priors() const { return priors_; }
  /// lambda_s = log((1 - p_s) / p_s).
  const Vector<Scalar>& log_odds() const { return log_odds_; }
  Scalar noise_std() const { return noise_std_; }
  Scalar noise_variance() const { return noise_std_ * noise_std_; }

  /// Fraction of non-zero signature entries.
  Scalar fill() const {
    return Scalar(columns_.nonZeros()) / (Scalar(columns_.rows()) * Scalar(columns_.cols()));
  }

  /// Same signatures and noise with different priors (prior-mismatch runs).
  FaultModel with_priors(Vector<Scalar> priors) const {
    return FaultModel(columns_, std::move(priors), noise_std_);
  }

 private:
  SparseByColumn<Scalar> columns_;
  SparseByRow<Scalar> rows_;
  Vector<Scalar> priors_;
  Vector<Scalar> log_odds_;
  Scalar noise_std_;
};

using FaultModeld = FaultModel<double>;

template <typename Scalar>
Vector<Scalar> as_real(const FaultPattern& x) {
  return x.template cast<Scalar>();
}

template <typename Scalar>
void check_dimensions(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y) {
  require(y.size() == model.measurements(), ErrorCode::kDimensionMismatch,
          "measurement vector length " + std::to_string(y.size()) + " != " +
              std::to_string(model.measurements()));
}

/// Negative log posterior up to an additive constant:
/// lambda^T x + ||y - A x||^2 / (2 sigma^2).
template <typename Scalar>
Scalar log_loss(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                const FaultPattern& x) {
  check_dimensions(model, y);
  require(x.size() == model.faults(), ErrorCode::kDimensionMismatch,
          "pattern length " + std::to_string(x.size()) + " != " + std::to_string(model.faults()));
  const Vector<Scalar> xr = as_real<Scalar>(x);
  const Vector<Scalar> residual = y - model.by_column() * xr;
  return model.log_odds().dot(xr) + residual.squaredNorm() / (Scalar(2) * model.noise_variance());
}

/// Pairwise (Ising-like) form of the log-loss over binary x:
/// energy(x) = sum_{s<t} J_st x_s x_t + sum_s h_s x_s.
template <typename Scalar = double>
struct PairwiseModel {
  /// Symmetric with both triangles stored and no diagonal entries.
  SparseByColumn<Scalar> coupling;
  Vector<Scalar> field;

  Eigen::Index size() const { return field.size(); }
};

template <typename Scalar>
PairwiseModel<Scalar> to_pairwise(const FaultModel<Scalar>& model,
                                  const MeasurementVector<Scalar>& y) {
  check_dimensions(model, y);
  const auto& a = model.by_column();
  const Scalar inv_var = Scalar(1) / model.noise_variance();
  SparseByColumn<Scalar> gram = (a.transpose() * a).pruned();

  PairwiseModel<Scalar> pm;
  pm.field = model.log_odds() - inv_var * (a.transpose() * y);
  std::vector<Eigen::Triplet<Scalar>> off_diagonal;
  off_diagonal.reserve(static_cast<std::size_t>(gram.nonZeros()));
  for (int k = 0; k < gram.outerSize(); ++k) {
    for (typename SparseByColumn<Scalar>::InnerIterator it(gram, k); it; ++it) {
      if (it.row() == it.col()) {
        pm.field[it.row()] += Scalar(0.5) * inv_var * it.value();
      } else if (it.value() != Scalar(0)) {
        off_diagonal.emplace_back(it.row(), it.col(), inv_var * it.value());
      }
    }
  }
  pm.coupling.resize(model.faults(), model.faults());
  pm.coupling.setFromTriplets(off_diagonal.begin(), off_diagonal.end());
  pm.coupling.makeCompressed();
  return pm;
}

template <typename Scalar>
Scalar pairwise_energy(const PairwiseModel<Scalar>& pm, const FaultPattern& x) {
  require(x.size() == pm.size(), ErrorCode::kDimensionMismatch, "pattern length mismatch");
  const Vector<Scalar> xr = as_real<Scalar>(x);
  return Scalar(0.5) * xr.dot(pm.coupling * xr) + pm.field.dot(xr);
}

/// Binary form of a bipolar problem: x_bin = (x + 1)/2, A' = 2A, y' = y + A 1.
template <typename Scalar = double>
struct BinaryForm {
  FaultPattern pattern;
  SparseByColumn<Scalar> signatures;
  Vector<Scalar> measurements;
};

template <typename Scalar>
BinaryForm<Scalar> bipolar_to_binary(const Eigen::VectorXi& bipolar,
                                     const SparseByColumn<Scalar>& a,
                                     const MeasurementVector<Scalar>& y) {
  require(bipolar.size() == a.cols(), ErrorCode::kDimensionMismatch,
          "bipolar vector length != column count");
  require(y.size() == a.rows(), ErrorCode::kDimensionMismatch,
          "measurement length != row count");
  BinaryForm<Scalar> out;
  out.pattern.resize(bipolar.size());
  for (Eigen::Index s = 0; s < bipolar.size(); ++s) {
    require(bipolar[s] == 1 || bipolar[s] == -1, ErrorCode::kInvalidArgument,
            "entry " + std::to_string(s) + " is not bipolar");
    out.pattern[s] = static_cast<std::uint8_t>((bipolar[s] + 1) / 2);
  }
  out.signatures = Scalar(2) * a;
  out.measurements = y + a * Vector<Scalar>::Ones(a.cols());
  return out;
}

/// Random-instance generator settings. Defaults are the desk-scale benchmark.
struct GeneratorConfig {
  Eigen::Index m = 100;
  Eigen::Index n = 200;
  double p = 0.12;
  double q = 0.2;
  double sigma = 1.0;
};

inline void validate(const GeneratorConfig& config) {
  require(config.m >= 1 && config.n >= 1, ErrorCode::kInvalidArgument, "m and n must be positive");
  require(config.p > 0.0 && config.p < 1.0, ErrorCode::kInvalidArgument, "p must lie in (0,1)");
  require(config.q > 0.0 && config.q <= 1.0, ErrorCode::kInvalidArgument, "q must lie in (0,1]");
  require(std::isfinite(config.sigma) && config.sigma > 0.0, ErrorCode::kInvalidArgument,
          "sigma must be positive");
}

template <typename Scalar = double>
struct Instance {
  FaultModel<Scalar> model;
  FaultPattern truth;
  MeasurementVector<Scalar> measurements;
};

/// Draws A with i.i.d. entries that are non-zero with probability q and
/// equiprobable +-1 otherwise, x ~ Bernoulli(p) i.i.d., y = A x + N(0, sigma^2 I).
template <typename Scalar = double>
Instance<Scalar> sample_instance(const GeneratorConfig& config, std::uint64_t seed) {
  validate(config);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution nonzero(config.q);
  std::bernoulli_distribution positive(0.5);
  std::bernoulli_distribution fault(config.p);
  std::normal_distribution<double> noise(0.0, config.sigma);

  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(static_cast<std::size_t>(config.q * double(config.m * config.n) * 1.1) + 16);
  for (Eigen::Index s = 0; s < config.n; ++s) {
    for (Eigen::Index i = 0; i < config.m; ++i) {
      if (nonzero(rng)) entries.emplace_back(i, s, positive(rng) ? Scalar(1) : Scalar(-1));
    }
  }
  FaultPattern truth(config.n);
  for (Eigen::Index s = 0; s < config.n; ++s) truth[s] = fault(rng) ? 1 : 0;

  auto model = FaultModel<Scalar>::from_triplets(
      config.m, config.n, entries, Vector<Scalar>::Constant(config.n, Scalar(config.p)),
      Scalar(config.sigma));
  MeasurementVector<Scalar> y = model.by_column() * as_real<Scalar>(truth);
  for (Eigen::Index i = 0; i < config.m; ++i) y[i] += Scalar(noise(rng));
  return Instance<Scalar>{std::move(model), std::move(truth), std::move(y)};
}

}  // namespace faultbp
