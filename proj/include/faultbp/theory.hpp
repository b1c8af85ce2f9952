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

// Scalar-channel performance limits for Bernoulli inputs.
//
// The channel is Z = X + W with X ~ Ber(p) and W ~ N(0, 1/snr). A sparse
// linear system with measurement ratio delta and SNR gamma decouples into
// such channels at snr = eta * gamma, where eta solves
//
//     1 / eta = 1 + gamma / (p * delta) * mmse(p, eta * gamma).

#pragma once

#include <iosfwd>
#include <vector>

namespace faultbp::theory {

struct ScalarChannelSpec {
  double p;
  double snr;
};

/// E[(X - E[X|Z])^2]; exactly p(1-p) at snr = 0.
double bernoulli_mmse(double p, double snr);

inline double bernoulli_mmse(const ScalarChannelSpec& spec) {
  return bernoulli_mmse(spec.p, spec.snr);
}

/// Error probability of the MAP decision on Z.
double bernoulli_map_error(double p, double snr);

struct EtaSolution {
  /// Fixed point reached from eta = 0.5.
  double eta;
  /// Distinct fixed points reached from the start grid, ascending.
  std::vector<double> fixed_points;
  bool multiple;
};

/// |1/eta - 1 - gamma/(p delta) mmse(p, eta gamma)|.
double eta_residual(double p, double delta, double gamma, double eta);

EtaSolution eta_fixed_point(double p, double delta, double gamma);

enum class Distortion { kSquare, kHamming };

double predicted_distortion(double p, double delta, double gamma, Distortion metric);

/// One row per gamma: gamma,eta,fixed_points,multiple,square,hamming.
void write_theory_csv(std::ostream& os, double p, double delta, const std::vector<double>& gammas);

}  // namespace faultbp::theory
