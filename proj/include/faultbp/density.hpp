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

// Quantized one-dimensional densities on a shared symmetric grid.
//
// A density is a vector of per-bin masses over b cells covering [-R, R]; cell
// k is centred at -R + (k + 1/2) * delta with delta = 2R / b. Every operation
// returns a normalized, non-negative density.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "faultbp/error.hpp"
#include "faultbp/model.hpp"
#include "faultbp/spectral.hpp"

namespace faultbp {

template <typename Scalar = double>
class Grid {
 public:
  Grid(int bins, Scalar range) : bins_(bins), range_(range) {
    require(bins >= 8, ErrorCode::kInvalidArgument, "grid needs at least 8 bins");
    require(std::isfinite(range) && range > Scalar(0), ErrorCode::kInvalidArgument,
            "grid range must be positive");
  }

  int bins() const { return bins_; }
  Scalar range() const { return range_; }
  Scalar spacing() const { return Scalar(2) * range_ / Scalar(bins_); }
  Scalar center(int k) const { return -range_ + (Scalar(k) + Scalar(0.5)) * spacing(); }

  Vector<Scalar> centers() const {
    Vector<Scalar> c(bins_);
    for (int k = 0; k < bins_; ++k) c[k] = center(k);
    return c;
  }

  /// Fractional bin coordinate of x: integer values land on centres.
  Scalar coordinate(Scalar x) const { return (x + range_) / spacing() - Scalar(0.5); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.bins_ == b.bins_ && a.range_ == b.range_;
  }

 private:
  int bins_;
  Scalar range_;
};

template <typename Scalar = double>
class QuantizedDensity {
 public:
  QuantizedDensity(Grid<Scalar> grid, Vector<Scalar> weights)
      : grid_(grid), weights_(std::move(weights)) {
    require(weights_.size() == grid_.bins(), ErrorCode::kDimensionMismatch,
            "weight vector length does not match the grid");
    require((weights_.array() >= Scalar(0)).all() && weights_.allFinite(),
            ErrorCode::kInvalidArgument, "density weights must be finite and non-negative");
  }

  static QuantizedDensity uniform(Grid<Scalar> grid) {
    return QuantizedDensity(grid, Vector<Scalar>::Constant(grid.bins(), Scalar(1) / grid.bins()));
  }

  const Grid<Scalar>& grid() const { return grid_; }
  const Vector<Scalar>& weights() const { return weights_; }
  int bins() const { return grid_.bins(); }
  Scalar operator[](int k) const { return weights_[k]; }

  Scalar total() const { return weights_.sum(); }

  QuantizedDensity& normalize() {
    const Scalar mass = weights_.sum();
    require(mass > Scalar(0) && std::isfinite(mass), ErrorCode::kEmptySupport,
            "density has no mass on the grid");
    weights_ /= mass;
    return *this;
  }

  Scalar mean() const { return grid_.centers().dot(weights_) / total(); }

  /// Mass strictly above x, counting a cell whose centre equals x as half.
  Scalar mass_above(Scalar x) const {
    Scalar above = 0;
    for (int k = 0; k < bins(); ++k) {
      const Scalar c = grid_.center(k);
      if (c > x) above += weights_[k];
      else if (c == x) above += Scalar(0.5) * weights_[k];
    }
    return above / total();
  }

  /// Centre of the heaviest cell; the lowest index wins ties.
  Scalar argmax_center() const {
    Eigen::Index k = 0;
    weights_.maxCoeff(&k);
    return grid_.center(static_cast<int>(k));
  }

 private:
  Grid<Scalar> grid_;
  Vector<Scalar> weights_;
};

using Gridd = Grid<double>;
using Densityd = QuantizedDensity<double>;

namespace detail {

template <typename Scalar>
void check_same_grid(const QuantizedDensity<Scalar>& a, const QuantizedDensity<Scalar>& b) {
  require(a.grid() == b.grid(), ErrorCode::kGridMismatch, "densities live on different grids");
}

template <typename Scalar>
QuantizedDensity<Scalar> normalized(const Grid<Scalar>& grid, Vector<Scalar> w,
                                    const char* what) {
  const Scalar mass = w.sum();
  require(mass > Scalar(0) && std::isfinite(mass), ErrorCode::kEmptySupport,
          std::string(what) + ": result has no mass on the grid");
  w /= mass;
  return QuantizedDensity<Scalar>(grid, std::move(w));
}

}  // namespace detail

/// Half-width of the discretization window: 1.2 * max(max|y_i|, q n),
/// never below 2 so that {0, 1} and some slack are always covered.
template <typename Scalar>
Scalar choose_range(const MeasurementVector<Scalar>& y, Scalar fill, Eigen::Index faults) {
  require(faults >= 1, ErrorCode::kInvalidArgument, "fault count must be positive");
  require(fill >= Scalar(0) && fill <= Scalar(1), ErrorCode::kInvalidArgument,
          "fill fraction must lie in [0,1]");
  const Scalar peak = y.size() > 0 ? y.cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar r = Scalar(1.2) * std::max(peak, fill * Scalar(faults));
  return std::max(r, Scalar(2));
}

template <typename Scalar>
struct MixtureComponent {
  Scalar weight;
  Scalar mean;
  Scalar variance;
};

/// Per-cell masses proportional to sum_c w_c exp(-(center - mu_c)^2 / (2 nu_c)).
template <typename Scalar>
QuantizedDensity<Scalar> mixture_on_grid(const Grid<Scalar>& grid,
                                         std::span<const MixtureComponent<Scalar>> components) {
  require(!components.empty(), ErrorCode::kInvalidArgument, "mixture has no components");
  Vector<Scalar> w = Vector<Scalar>::Zero(grid.bins());
  const Vector<Scalar> c = grid.centers();
  for (const auto& comp : components) {
    require(comp.variance > Scalar(0), ErrorCode::kInvalidArgument, "variance must be positive");
    require(comp.weight >= Scalar(0), ErrorCode::kInvalidArgument, "weights must be non-negative");
    if (comp.weight == Scalar(0)) continue;
    // Scalar exp: the vectorized one clamps large negative arguments, which
    // would give an off-grid component a small uniform floor instead of zero.
    w.array() += comp.weight * (-(c.array() - comp.mean).square() / (Scalar(2) * comp.variance))
                                   .unaryExpr([](Scalar v) { return std::exp(v); });
  }
  const Scalar mass = w.sum();
  require(mass > Scalar(0), ErrorCode::kEmptySupport,
          "mixture has no mass on the grid; the grid range is too small");
  return QuantizedDensity<Scalar>(grid, w / mass);
}

template <typename Scalar>
QuantizedDensity<Scalar> gaussian_on_grid(const Grid<Scalar>& grid, Scalar mean, Scalar variance) {
  const MixtureComponent<Scalar> one{Scalar(1), mean, variance};
  return mixture_on_grid(grid, std::span<const MixtureComponent<Scalar>>(&one, 1));
}

/// Relaxed binary prior p N(1, nu) + (1 - p) N(0, nu).
template <typename Scalar>
QuantizedDensity<Scalar> relaxed_prior(const Grid<Scalar>& grid, Scalar p, Scalar variance) {
  const MixtureComponent<Scalar> lobes[2] = {{p, Scalar(1), variance},
                                             {Scalar(1) - p, Scalar(0), variance}};
  return mixture_on_grid(grid, std::span<const MixtureComponent<Scalar>>(lobes));
}

template <typename Scalar>
QuantizedDensity<Scalar> product(const QuantizedDensity<Scalar>& a,
                                 const QuantizedDensity<Scalar>& b) {
  detail::check_same_grid(a, b);
  return detail::normalized(a.grid(), Vector<Scalar>(a.weights().cwiseProduct(b.weights())),
                            "product");
}

/// Removes one factor from a full product by pointwise division; divisors
/// below `floor` are raised to it.
template <typename Scalar>
QuantizedDensity<Scalar> leave_one_out(const QuantizedDensity<Scalar>& all,
                                       const QuantizedDensity<Scalar>& one,
                                       Scalar floor = Scalar(1e-12)) {
  detail::check_same_grid(all, one);
  Vector<Scalar> w = all.weights().array() / one.weights().array().max(floor);
  return detail::normalized(all.grid(), std::move(w), "leave_one_out");
}

/// Density of a * X given the density of X, resampled on the same grid.
/// a = -1 reverses the vector exactly; other factors interpolate linearly.
template <typename Scalar>
QuantizedDensity<Scalar> rescale(const QuantizedDensity<Scalar>& d, Scalar a) {
  require(a != Scalar(0) && std::isfinite(a), ErrorCode::kInvalidArgument,
          "rescale factor must be finite and non-zero");
  if (a == Scalar(1)) return d;
  const int b = d.bins();
  if (a == Scalar(-1)) return QuantizedDensity<Scalar>(d.grid(), Vector<Scalar>(d.weights().reverse()));
  const auto& grid = d.grid();
  Vector<Scalar> w(b);
  for (int k = 0; k < b; ++k) {
    const Scalar u = grid.coordinate(grid.center(k) / a);
    const Scalar lo = std::floor(u);
    const Scalar t = u - lo;
    const long k0 = static_cast<long>(lo);
    const Scalar w0 = (k0 >= 0 && k0 < b) ? d[static_cast<int>(k0)] : Scalar(0);
    const Scalar w1 = (k0 + 1 >= 0 && k0 + 1 < b) ? d[static_cast<int>(k0 + 1)] : Scalar(0);
    w[k] = (Scalar(1) - t) * w0 + t * w1;
  }
  return detail::normalized(grid, std::move(w), "rescale");
}

/// Cell offset between the sum of `terms` cell indices and the result cell.
///
/// A sum of `terms` centres sits at (sum_k - (terms - 1)(b - 1)/2) cells. For
/// an even cell count and an even number of terms this is half a cell off the
/// grid; `half_cell` reports that case and `offset` is then rounded down.
struct ConvolutionAlignment {
  long offset;
  bool half_cell;
};

inline ConvolutionAlignment convolution_alignment(int bins, int terms) {
  const long twice = static_cast<long>(terms - 1) * static_cast<long>(bins - 1);
  return {twice / 2, (twice % 2) != 0};
}

/// Linear convolution of `kernel` with every density in `others`, cropped to
/// the grid window. Mass convolved outside [-R, R] is discarded. A residual
/// half-cell alignment is split evenly between the two neighbouring cells,
/// which keeps the mean exact.
template <typename Scalar>
QuantizedDensity<Scalar> convolve_all(const QuantizedDensity<Scalar>& kernel,
                                      std::span<const QuantizedDensity<Scalar>> others) {
  for (const auto& d : others) detail::check_same_grid(kernel, d);
  if (others.empty()) return kernel;

  const int b = kernel.bins();
  const int terms = static_cast<int>(others.size()) + 1;
  const long support = static_cast<long>(terms) * (b - 1) + 1;
  const int length = next_pow2(static_cast<int>(support));

  RealFft<Scalar> fft(length);
  ComplexVector<Scalar> acc = fft.forward(kernel.weights());
  for (const auto& d : others) acc.array() *= fft.forward(d.weights()).array();
  const Vector<Scalar> full = fft.inverse(acc);

  const auto align = convolution_alignment(b, terms);
  auto at = [&](long j) -> Scalar {
    return (j >= 0 && j < support) ? std::max(full[j], Scalar(0)) : Scalar(0);
  };
  Vector<Scalar> w(b);
  for (int k = 0; k < b; ++k) {
    const long j = k + align.offset;
    w[k] = align.half_cell ? Scalar(0.5) * (at(j) + at(j + 1)) : at(j);
  }
  return detail::normalized(kernel.grid(), std::move(w), "convolve_all");
}

template <typename Scalar>
QuantizedDensity<Scalar> convolve_all(const QuantizedDensity<Scalar>& kernel,
                                      const std::vector<QuantizedDensity<Scalar>>& others) {
  return convolve_all(kernel, std::span<const QuantizedDensity<Scalar>>(others));
}

template <typename Scalar>
Scalar l1_distance(const QuantizedDensity<Scalar>& a, const QuantizedDensity<Scalar>& b) {
  detail::check_same_grid(a, b);
  return (a.weights() - b.weights()).cwiseAbs().sum();
}

/// Debug dump as "center,weight" rows.
template <typename Scalar>
void write_csv(std::ostream& os, const QuantizedDensity<Scalar>& d) {
  const auto prec = os.precision(std::numeric_limits<Scalar>::max_digits10);
  os << "center,weight\n";
  for (int k = 0; k < d.bins(); ++k) os << d.grid().center(k) << ',' << d[k] << '\n';
  os.precision(prec);
}

}  // namespace faultbp
