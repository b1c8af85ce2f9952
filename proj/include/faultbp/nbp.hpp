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

// Belief propagation over the continuous relaxation of the fault model.
//
// Each fault x_s carries the relaxed prior p N(x;1,nu) + (1-p) N(x;0,nu) and
// each non-empty measurement row i contributes the factor N(y_i; a_i x, s^2).
// Messages are quantized densities on one grid. A factor-to-variable message
// is the density of u = a_is x_s implied by
//
//     u = y_i + w - sum_{t != s} a_it x_t,    w ~ N(0, sigma^2),
//
// i.e. the convolution of N(y_i, sigma^2) with the incoming messages
// rescaled by -a_it, computed as a product of spectra.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "faultbp/density.hpp"
#include "faultbp/error.hpp"
#include "faultbp/model.hpp"
#include "faultbp/spectral.hpp"

namespace faultbp {

/// Bipartite graph of the non-zeros of A. Rows without non-zeros get no factor.
template <typename Scalar = double>
struct FactorGraph {
  struct Edge {
    int factor;
    int variable;
    Scalar coefficient;
  };

  std::vector<Edge> edges;
  /// Measurement row behind each factor.
  std::vector<int> factor_rows;
  std::vector<std::vector<int>> factor_edges;
  std::vector<std::vector<int>> variable_edges;

  int factors() const { return static_cast<int>(factor_edges.size()); }
  int variables() const { return static_cast<int>(variable_edges.size()); }
};

template <typename Scalar>
FactorGraph<Scalar> build_graph(const FaultModel<Scalar>& model) {
  FactorGraph<Scalar> g;
  g.variable_edges.resize(static_cast<std::size_t>(model.faults()));
  const auto& rows = model.by_row();
  for (int i = 0; i < rows.outerSize(); ++i) {
    typename SparseByRow<Scalar>::InnerIterator it(rows, i);
    if (!it) continue;
    const int f = g.factors();
    g.factor_rows.push_back(i);
    g.factor_edges.emplace_back();
    for (; it; ++it) {
      const int e = static_cast<int>(g.edges.size());
      const int s = static_cast<int>(it.col());
      g.edges.push_back({f, s, it.value()});
      g.factor_edges.back().push_back(e);
      g.variable_edges[static_cast<std::size_t>(s)].push_back(e);
    }
  }
  return g;
}

template <typename Scalar = double>
struct SolverConfig {
  int bins = 1024;
  int max_iters = 50;
  Scalar tolerance = Scalar(1e-5);
  /// Variance nu of each prior lobe; unset means grid spacing squared.
  std::optional<Scalar> relaxation_variance;
  /// Weight kept from the previous variable-to-factor message.
  Scalar damping = Scalar(0);
};

template <typename Scalar>
void validate(const SolverConfig<Scalar>& config) {
  require(config.bins >= 8, ErrorCode::kInvalidArgument, "bins must be at least 8");
  require(config.max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be at least 1");
  require(config.tolerance > Scalar(0), ErrorCode::kInvalidArgument, "tolerance must be positive");
  require(config.damping >= Scalar(0) && config.damping < Scalar(1), ErrorCode::kInvalidArgument,
          "damping must lie in [0,1)");
  require(!config.relaxation_variance || *config.relaxation_variance > Scalar(0),
          ErrorCode::kInvalidArgument, "relaxation variance must be positive");
}

/// All edge messages of one run; column e holds the message on edge e.
template <typename Scalar = double>
struct MessageState {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Grid<Scalar> grid;
  Matrix to_factor;
  Matrix to_variable;
  int iteration = 0;
  /// Relative l2 change of each variable's incoming product in the last check.
  Vector<Scalar> residuals;
  /// Normalized incoming products from the previous check (empty before the first).
  Matrix previous_incoming;

  QuantizedDensity<Scalar> message_to_factor(int edge) const {
    return QuantizedDensity<Scalar>(grid, to_factor.col(edge));
  }
  QuantizedDensity<Scalar> message_to_variable(int edge) const {
    return QuantizedDensity<Scalar>(grid, to_variable.col(edge));
  }
};

template <typename Scalar = double>
struct BeliefResult {
  std::vector<QuantizedDensity<Scalar>> beliefs;
  SoftDecision<Scalar> soft;
  FaultPattern pattern;
  /// Belief mass above 1/2 per fault.
  Vector<Scalar> fault_probability;
  int iterations = 0;
  bool converged = false;
};

template <typename Scalar = double>
struct IterationTrace {
  int iteration;
  Scalar max_residual;
  SoftDecision<Scalar> soft;
};

template <typename Scalar = double>
class NbpSolver {
 public:
  using Matrix = typename MessageState<Scalar>::Matrix;
  using Trace = std::function<void(const IterationTrace<Scalar>&)>;

  NbpSolver(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
            SolverConfig<Scalar> config)
      : config_(config),
        graph_(build_graph(model)),
        grid_(config.bins, choose_range(y, model.fill(), model.faults())),
        fft_(next_pow2(2 * config.bins)) {
    check_dimensions(model, y);
    validate(config_);
    const Scalar spacing = grid_.spacing();
    variance_ = config_.relaxation_variance.value_or(spacing * spacing);
    build_priors(model);
    build_kernels(model, y);
  }

  const FactorGraph<Scalar>& graph() const { return graph_; }
  const Grid<Scalar>& grid() const { return grid_; }
  Scalar relaxation_variance() const { return variance_; }

  /// Relaxed prior of variable s on the grid.
  QuantizedDensity<Scalar> local_potential(int s) const {
    Vector<Scalar> w = (log_prior_.col(s).array() - log_prior_.col(s).maxCoeff()).exp();
    return detail::normalized(grid_, std::move(w), "local_potential");
  }

  MessageState<Scalar> initial_state() const {
    const int b = grid_.bins();
    const auto edges = static_cast<Eigen::Index>(graph_.edges.size());
    MessageState<Scalar> state{grid_,
                               Matrix::Constant(b, edges, Scalar(1) / b),
                               Matrix::Constant(b, edges, Scalar(1) / b),
                               0,
                               Vector<Scalar>::Zero(graph_.variables()),
                               Matrix()};
    return state;
  }

  /// m_si proportional to g_s * prod_{j != i} m_js, by prefix and suffix
  /// products rescaled to unit maximum at each step. A variable whose
  /// product underflows is redone in the log domain.
  void update_var_to_factor(MessageState<Scalar>& state) const {
    const FlushSubnormals flush;
    const int b = grid_.bins();
    Matrix suffix(b, max_variable_degree_ + 1);
    Vector<Scalar> prefix(b);
    Vector<Scalar> out(b);
    for (int s = 0; s < graph_.variables(); ++s) {
      const auto& edges = graph_.variable_edges[static_cast<std::size_t>(s)];
      const auto deg = static_cast<Eigen::Index>(edges.size());
      auto message = [&](Eigen::Index j) {
        return state.to_variable.col(edges[static_cast<std::size_t>(j)]);
      };
      bool ok = true;
      suffix.col(deg) = prior_.col(s);
      for (Eigen::Index j = deg - 1; j >= 0 && ok; --j) {
        suffix.col(j) = suffix.col(j + 1).cwiseProduct(message(j));
        if (j % kRescaleEvery == 0) ok = rescale_to_unit_max(suffix.col(j));
      }
      prefix.setOnes();
      for (Eigen::Index j = 0; j < deg && ok; ++j) {
        out = prefix.cwiseProduct(suffix.col(j + 1));
        const Scalar mass = out.sum();
        ok = mass > Scalar(0);
        if (!ok) break;
        emit(state, edges[static_cast<std::size_t>(j)], out / mass);
        prefix.array() *= message(j).array();
        if (j % kRescaleEvery == kRescaleEvery - 1) ok = rescale_to_unit_max(prefix);
      }
      if (!ok) update_variable_in_logs(state, s);
    }
  }

  void update_factor_to_var(MessageState<Scalar>& state) {
    const FlushSubnormals flush;
    for (int f = 0; f < graph_.factors(); ++f) update_factor(state, f);
  }

  /// Recomputes each variable's normalized incoming product and compares it
  /// with the previous call. The first call only records the products.
  bool check_convergence(MessageState<Scalar>& state) const {
    Matrix current = incoming_products(state);
    bool converged = false;
    if (state.previous_incoming.size() != 0) {
      for (int s = 0; s < graph_.variables(); ++s) {
        const Scalar base = state.previous_incoming.col(s).norm();
        state.residuals[s] = (current.col(s) - state.previous_incoming.col(s)).norm() / base;
      }
      converged = state.residuals.size() == 0 || state.residuals.maxCoeff() < config_.tolerance;
    }
    state.previous_incoming = std::move(current);
    return converged;
  }

  BeliefResult<Scalar> beliefs(const MessageState<Scalar>& state) const {
    BeliefResult<Scalar> result;
    const int n = graph_.variables();
    result.soft.resize(n);
    result.fault_probability.resize(n);
    result.beliefs.reserve(static_cast<std::size_t>(n));
    const Matrix logs = log_beliefs(state);
    for (int s = 0; s < n; ++s) {
      Vector<Scalar> w = (logs.col(s).array() - logs.col(s).maxCoeff()).exp();
      auto belief = detail::normalized(grid_, std::move(w), "belief");
      result.soft[s] = std::clamp(belief.argmax_center(), Scalar(0), Scalar(1));
      result.fault_probability[s] = belief.mass_above(Scalar(0.5));
      result.beliefs.push_back(std::move(belief));
    }
    result.pattern = round_half_down(result.soft);
    result.iterations = state.iteration;
    return result;
  }

  BeliefResult<Scalar> solve(const Trace& trace = {}) {
    auto state = initial_state();
    bool converged = false;
    while (state.iteration < config_.max_iters && !converged) {
      update_var_to_factor(state);
      update_factor_to_var(state);
      ++state.iteration;
      converged = check_convergence(state);
      if (trace) {
        const Scalar worst = state.residuals.size() ? state.residuals.maxCoeff() : Scalar(0);
        const Scalar reported =
            state.iteration == 1 ? std::numeric_limits<Scalar>::infinity() : worst;
        trace(IterationTrace<Scalar>{state.iteration, reported, soft_decisions(state)});
      }
    }
    auto result = beliefs(state);
    result.converged = converged;
    return result;
  }

 private:
  static constexpr Scalar kTiny = std::numeric_limits<Scalar>::min();
  // Messages are normalized, so eight unrescaled factors stay far above
  // underflow unless the product is genuinely negligible.
  static constexpr Eigen::Index kRescaleEvery = 8;

  template <typename Column>
  static bool rescale_to_unit_max(Column&& col) {
    const Scalar top = col.maxCoeff();
    if (!(top > Scalar(0))) return false;
    col /= top;
    return true;
  }

  void emit(MessageState<Scalar>& state, int edge, Vector<Scalar> out) const {
    auto slot = state.to_factor.col(edge);
    if (config_.damping > Scalar(0) && state.iteration > 0) {
      out = (Scalar(1) - config_.damping) * out + config_.damping * slot;
      out /= out.sum();
    }
    slot = out;
  }

  void update_variable_in_logs(MessageState<Scalar>& state, int s) const {
    const int b = grid_.bins();
    const auto& edges = graph_.variable_edges[static_cast<std::size_t>(s)];
    const auto deg = static_cast<Eigen::Index>(edges.size());
    Matrix logs(b, deg);
    Vector<Scalar> total = log_prior_.col(s);
    for (Eigen::Index j = 0; j < deg; ++j) {
      logs.col(j) =
          state.to_variable.col(edges[static_cast<std::size_t>(j)]).array().max(kTiny).log();
      total += logs.col(j);
    }
    Vector<Scalar> out(b);
    for (Eigen::Index j = 0; j < deg; ++j) {
      out = total - logs.col(j);
      out = (out.array() - out.maxCoeff()).exp();
      emit(state, edges[static_cast<std::size_t>(j)], out / out.sum());
    }
  }

  void build_priors(const FaultModel<Scalar>& model) {
    const int b = grid_.bins();
    const Vector<Scalar> c = grid_.centers();
    log_prior_.resize(b, graph_.variables());
    prior_.resize(b, graph_.variables());
    const Scalar inv2nu = Scalar(1) / (Scalar(2) * variance_);
    for (int s = 0; s < graph_.variables(); ++s) {
      const Scalar p = model.priors()[s];
      for (int k = 0; k < b; ++k) {
        const Scalar one = std::log(p) - (c[k] - Scalar(1)) * (c[k] - Scalar(1)) * inv2nu;
        const Scalar zero = std::log1p(-p) - c[k] * c[k] * inv2nu;
        const Scalar hi = std::max(one, zero);
        log_prior_(k, s) = hi + std::log1p(std::exp(std::min(one, zero) - hi));
      }
      prior_.col(s) = (log_prior_.col(s).array() - log_prior_.col(s).maxCoeff()).exp();
      max_variable_degree_ = std::max(
          max_variable_degree_,
          static_cast<Eigen::Index>(graph_.variable_edges[static_cast<std::size_t>(s)].size()));
    }
  }

  // N(y_i, sigma^2) sampled on the grid, shifted by half a cell when the
  // factor's sum of centres lands between cells.
  void build_kernels(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y) {
    const int b = grid_.bins();
    const Scalar var = model.noise_variance();
    noise_var_ = var;
    y_of_factor_.clear();
    kernels_.resize(static_cast<std::size_t>(graph_.factors()));
    alignments_.resize(static_cast<std::size_t>(graph_.factors()));
    Vector<Scalar> w(b);
    for (int f = 0; f < graph_.factors(); ++f) {
      const int degree = static_cast<int>(graph_.factor_edges[static_cast<std::size_t>(f)].size());
      const auto align = convolution_alignment(b, degree);
      const Scalar shift = align.half_cell ? Scalar(0.5) * grid_.spacing() : Scalar(0);
      const Scalar yi = y[graph_.factor_rows[static_cast<std::size_t>(f)]];
      y_of_factor_.push_back(yi);
      for (int k = 0; k < b; ++k) {
        const Scalar d = grid_.center(k) + shift - yi;
        w[k] = std::exp(-d * d / (Scalar(2) * var));
      }
      require(w.sum() > Scalar(0), ErrorCode::kEmptySupport,
              "measurement kernel of factor " + std::to_string(f) + " has no mass on the grid");
      w /= w.sum();
      alignments_[static_cast<std::size_t>(f)] = align;
      if (degree > 1) fft_.forward(w, kernels_[static_cast<std::size_t>(f)]);
    }
  }

  // out(x) = in(x / a) on the grid.
  void scaled(const Eigen::Ref<const Vector<Scalar>>& in, Scalar a, Vector<Scalar>& out) const {
    if (a == Scalar(1)) {
      out = in;
    } else if (a == Scalar(-1)) {
      out = in.reverse();
    } else {
      out = rescale(QuantizedDensity<Scalar>(grid_, in), a).weights();
    }
  }

  void update_factor(MessageState<Scalar>& state, int f) {
    const auto& edges = graph_.factor_edges[static_cast<std::size_t>(f)];
    const int degree = static_cast<int>(edges.size());
    const int b = grid_.bins();
    const int n = fft_.length();
    const Scalar yi = y_of_factor_[static_cast<std::size_t>(f)];

    if (degree == 1) {
      const auto& e = graph_.edges[static_cast<std::size_t>(edges[0])];
      Vector<Scalar> w(b);
      for (int k = 0; k < b; ++k) {
        const Scalar d = e.coefficient * grid_.center(k) - yi;
        w[k] = std::exp(-d * d / (Scalar(2) * noise_var_));
      }
      store(state, edges[0], w, f);
      return;
    }

    spectra_.resize(static_cast<std::size_t>(degree));
    for (int j = 0; j < degree; ++j) {
      const auto& e = graph_.edges[static_cast<std::size_t>(edges[static_cast<std::size_t>(j)])];
      scaled(state.to_factor.col(edges[static_cast<std::size_t>(j)]), -e.coefficient, column_);
      fft_.forward(column_, spectra_[static_cast<std::size_t>(j)]);
    }
    // suffix_[j] = prod_{t >= j} spectra_[t]
    suffix_.resize(static_cast<std::size_t>(degree) + 1);
    suffix_[static_cast<std::size_t>(degree)] =
        ComplexVector<Scalar>::Ones(fft_.spectrum_size());
    for (int j = degree - 1; j >= 0; --j) {
      suffix_[static_cast<std::size_t>(j)] =
          suffix_[static_cast<std::size_t>(j) + 1].cwiseProduct(spectra_[static_cast<std::size_t>(j)]);
    }
    prefix_ = kernels_[static_cast<std::size_t>(f)];
    const auto offset = alignments_[static_cast<std::size_t>(f)].offset;
    Vector<Scalar> window(b);
    for (int j = 0; j < degree; ++j) {
      product_ = prefix_.cwiseProduct(suffix_[static_cast<std::size_t>(j) + 1]);
      fft_.inverse(product_, circular_);
      const int start = static_cast<int>(offset % n);
      const int first = std::min(b, n - start);
      window.head(first) = circular_.segment(start, first).cwiseMax(Scalar(0));
      window.tail(b - first) = circular_.head(b - first).cwiseMax(Scalar(0));
      const int edge = edges[static_cast<std::size_t>(j)];
      scaled(window, Scalar(1) / graph_.edges[static_cast<std::size_t>(edge)].coefficient, column_);
      store(state, edge, column_, f);
      prefix_.array() *= spectra_[static_cast<std::size_t>(j)].array();
    }
  }

  void store(MessageState<Scalar>& state, int edge, const Vector<Scalar>& w, int f) const {
    const Scalar mass = w.sum();
    require(mass > Scalar(0) && std::isfinite(mass), ErrorCode::kEmptySupport,
            "message from factor " + std::to_string(f) + " has no mass on the grid");
    state.to_variable.col(edge) = w / mass;
  }

  Matrix incoming_log_products(const MessageState<Scalar>& state) const {
    Matrix logs = Matrix::Zero(grid_.bins(), graph_.variables());
    for (int s = 0; s < graph_.variables(); ++s) {
      for (int e : graph_.variable_edges[static_cast<std::size_t>(s)]) {
        logs.col(s).array() += state.to_variable.col(e).array().max(kTiny).log();
      }
    }
    return logs;
  }

  Matrix incoming_products(const MessageState<Scalar>& state) const {
    Matrix out = Matrix::Ones(grid_.bins(), graph_.variables());
    for (int s = 0; s < graph_.variables(); ++s) {
      auto col = out.col(s);
      bool ok = true;
      for (int e : graph_.variable_edges[static_cast<std::size_t>(s)]) {
        col.array() *= state.to_variable.col(e).array();
        if (!(ok = rescale_to_unit_max(col))) break;
      }
      if (!ok) {
        Vector<Scalar> logs = Vector<Scalar>::Zero(grid_.bins());
        for (int e : graph_.variable_edges[static_cast<std::size_t>(s)]) {
          logs.array() += state.to_variable.col(e).array().max(kTiny).log();
        }
        col = (logs.array() - logs.maxCoeff()).exp();
      }
      col /= col.sum();
    }
    return out;
  }

  Matrix log_beliefs(const MessageState<Scalar>& state) const {
    return incoming_log_products(state) + log_prior_;
  }

  SoftDecision<Scalar> soft_decisions(const MessageState<Scalar>& state) const {
    const Matrix logs = log_beliefs(state);
    SoftDecision<Scalar> soft(graph_.variables());
    for (int s = 0; s < graph_.variables(); ++s) {
      Eigen::Index k = 0;
      logs.col(s).maxCoeff(&k);
      soft[s] = std::clamp(grid_.center(static_cast<int>(k)), Scalar(0), Scalar(1));
    }
    return soft;
  }

  SolverConfig<Scalar> config_;
  FactorGraph<Scalar> graph_;
  Grid<Scalar> grid_;
  RealFft<Scalar> fft_;
  Scalar variance_ = 0;
  Scalar noise_var_ = 0;
  Matrix log_prior_;
  /// exp(log_prior_) scaled to unit maximum per column.
  Matrix prior_;
  Eigen::Index max_variable_degree_ = 0;
  std::vector<ComplexVector<Scalar>> kernels_;
  std::vector<ConvolutionAlignment> alignments_;
  std::vector<Scalar> y_of_factor_;

  // Scratch reused across factors.
  std::vector<ComplexVector<Scalar>> spectra_;
  std::vector<ComplexVector<Scalar>> suffix_;
  ComplexVector<Scalar> prefix_;
  ComplexVector<Scalar> product_;
  Vector<Scalar> circular_;
  Vector<Scalar> column_;
};

template <typename Scalar>
BeliefResult<Scalar> solve(const FaultModel<Scalar>& model, const MeasurementVector<Scalar>& y,
                           const SolverConfig<Scalar>& config,
                           const typename NbpSolver<Scalar>::Trace& trace = {}) {
  NbpSolver<Scalar> solver(model, y, config);
  return solver.solve(trace);
}

}  // namespace faultbp
