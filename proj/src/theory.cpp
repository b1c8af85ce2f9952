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

#include "faultbp/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "faultbp/error.hpp"

namespace faultbp::theory {

namespace {

constexpr double kLogRootTwoPi = 0.91893853320467274178;

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gauss_kronrod(const F& f, double a, double b, double& value, double& error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[static_cast<std::size_t>(j)];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[static_cast<std::size_t>(j)] * sum;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * sum;
  }
  value = kronrod * half;
  error = std::abs((kronrod - gauss) * half);
}

template <typename F>
double adaptive(const F& f, double a, double b, double tol, int depth) {
  double value = 0;
  double error = 0;
  gauss_kronrod(f, a, b, value, error);
  if (error <= tol || depth >= 40) return value;
  const double mid = 0.5 * (a + b);
  return adaptive(f, a, mid, 0.5 * tol, depth + 1) + adaptive(f, mid, b, 0.5 * tol, depth + 1);
}

double log_normal(double t) { return -0.5 * t * t - kLogRootTwoPi; }

void check_prior(double p) {
  require(p > 0.0 && p < 1.0 && std::isfinite(p), ErrorCode::kInvalidArgument,
          "prior must lie in (0,1)");
}

double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

double bernoulli_mmse(double p, double snr) {
  check_prior(p);
  require(snr >= 0.0 && std::isfinite(snr), ErrorCode::kInvalidArgument,
          "snr must be finite and non-negative");
  if (snr == 0.0) return p * (1.0 - p);

  // In t = sqrt(snr) z the two likelihoods are unit normals at 0 and a, and
  // Var(X | t) times the density of t is p(1-p) phi(t) phi(t-a) / mixture(t).
  const double a = std::sqrt(snr);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  auto integrand = [&](double t) {
    const double l0 = log_q + log_normal(t);
    const double l1 = log_p + log_normal(t - a);
    const double hi = std::max(l0, l1);
    const double mix = hi + std::log1p(std::exp(std::min(l0, l1) - hi));
    return std::exp(l0 + l1 - mix);
  };
  // The integrand is below min of the two weighted normals, so it is
  // negligible unless t is within 40 of both 0 and a.
  const double lo = std::max(-40.0, a - 40.0);
  const double hi = std::min(40.0, a + 40.0);
  if (lo >= hi) return 0.0;
  const int pieces = static_cast<int>(std::ceil((hi - lo) / 2.0));
  const double width = (hi - lo) / pieces;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    total += adaptive(integrand, lo + k * width, lo + (k + 1) * width, 1e-14 / pieces, 0);
  }
  return total;
}

double bernoulli_map_error(double p, double snr) {
  check_prior(p);
  require(snr >= 0.0 && std::isfinite(snr), ErrorCode::kInvalidArgument,
          "snr must be finite and non-negative");
  if (snr == 0.0) return std::min(p, 1.0 - p);
  // Decide 1 when z > tau = 1/2 + log((1-p)/p) / snr.
  const double tau = 0.5 + std::log((1.0 - p) / p) / snr;
  const double root = std::sqrt(snr);
  return p * (1.0 - normal_tail((tau - 1.0) * root)) + (1.0 - p) * normal_tail(tau * root);
}

double eta_residual(double p, double delta, double gamma, double eta) {
  return std::abs(1.0 / eta - 1.0 - gamma / (p * delta) * bernoulli_mmse(p, eta * gamma));
}

namespace {

double eta_map(double p, double delta, double gamma, double eta) {
  return 1.0 / (1.0 + gamma / (p * delta) * bernoulli_mmse(p, eta * gamma));
}

// Signed form whose root is the fixed point; decreasing in eta.
double eta_equation(double p, double delta, double gamma, double eta) {
  return 1.0 / eta - 1.0 - gamma / (p * delta) * bernoulli_mmse(p, eta * gamma);
}

double polish(double p, double delta, double gamma, double eta) {
  if (eta_residual(p, delta, gamma, eta) < 1e-9) return eta;
  double step = 1e-9;
  double lo = eta;
  double hi = eta;
  for (int k = 0; k < 60; ++k) {
    lo = std::max(eta - step, 1e-300);
    hi = std::min(eta + step, 1.0);
    if (eta_equation(p, delta, gamma, lo) * eta_equation(p, delta, gamma, hi) <= 0.0) break;
    step *= 2.0;
  }
  double flo = eta_equation(p, delta, gamma, lo);
  for (int k = 0; k < 200 && hi - lo > 0.0; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = eta_equation(p, delta, gamma, mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (eta_residual(p, delta, gamma, mid) < 1e-10) return mid;
  }
  return 0.5 * (lo + hi);
}

double iterate_from(double p, double delta, double gamma, double start) {
  double eta = start;
  std::ostringstream trace;
  for (int k = 0; k < 1000; ++k) {
    const double next = 0.5 * eta + 0.5 * eta_map(p, delta, gamma, eta);
    if (k >= 995) trace << ' ' << std::setprecision(12) << next;
    if (std::abs(next - eta) < 1e-8) {
      // Converged steps of size 1e-8 can sit farther from the root when the
      // map is nearly tangent; finish on the equation itself.
      return polish(p, delta, gamma, next);
    }
    eta = next;
  }
  throw Error(ErrorCode::kNotConverged,
              "eta iteration from " + std::to_string(start) + " did not converge; last iterates:" +
                  trace.str());
}

}  // namespace

EtaSolution eta_fixed_point(double p, double delta, double gamma) {
  check_prior(p);
  require(delta > 0.0 && std::isfinite(delta), ErrorCode::kInvalidArgument, "delta must be positive");
  require(gamma > 0.0 && std::isfinite(gamma), ErrorCode::kInvalidArgument, "gamma must be positive");

  EtaSolution out;
  out.eta = iterate_from(p, delta, gamma, 0.5);
  std::vector<double> found{out.eta};
  for (int k = 0; k < 10; ++k) found.push_back(iterate_from(p, delta, gamma, (k + 0.5) / 10.0));
  std::sort(found.begin(), found.end());
  for (double eta : found) {
    if (out.fixed_points.empty() || eta - out.fixed_points.back() > 1e-6) {
      out.fixed_points.push_back(eta);
    }
  }
  out.multiple = out.fixed_points.size() > 1;
  return out;
}

double predicted_distortion(double p, double delta, double gamma, Distortion metric) {
  const double snr = eta_fixed_point(p, delta, gamma).eta * gamma;
  return metric == Distortion::kSquare ? bernoulli_mmse(p, snr) : bernoulli_map_error(p, snr);
}

void write_theory_csv(std::ostream& os, double p, double delta, const std::vector<double>& gammas) {
  os << "gamma,eta,fixed_points,multiple,square,hamming\n";
  os << std::setprecision(12);
  for (double gamma : gammas) {
    const auto sol = eta_fixed_point(p, delta, gamma);
    const double snr = sol.eta * gamma;
    os << gamma << ',' << sol.eta << ',';
    for (std::size_t k = 0; k < sol.fixed_points.size(); ++k) {
      os << (k ? ";" : "") << sol.fixed_points[k];
    }
    os << ',' << (sol.multiple ? 1 : 0) << ',' << bernoulli_mmse(p, snr) << ','
       << bernoulli_map_error(p, snr) << '\n';
  }
}

}  // namespace faultbp::theory
