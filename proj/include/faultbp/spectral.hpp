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

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "faultbp/model.hpp"

namespace faultbp {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Flushes subnormal results to zero on this thread while alive. Long
/// spectrum products decay into the subnormal range, where x86 arithmetic is
/// two orders of magnitude slower; the flushed values are below 1e-308.
class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040U); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#else
  FlushSubnormals() = default;
#endif
 public:
  FlushSubnormals(const FlushSubnormals&) = delete;
  FlushSubnormals& operator=(const FlushSubnormals&) = delete;
};

/// Makes the FFT planner safe to call from several worker threads. Must run
/// once before any worker creates a RealFft; repeated calls are no-ops.
void enable_concurrent_fft_planning();

/// Real-input transform of fixed length with zero padding on input and a
/// half spectrum (length/2 + 1 bins). Holds its own plans, so one instance
/// per worker.
template <typename Scalar>
class RealFft {
 public:
  explicit RealFft(int length) : length_(length), padded_(Vector<Scalar>::Zero(length)) {
    fft_.SetFlag(Eigen::FFT<Scalar>::HalfSpectrum);
  }

  int length() const { return length_; }
  int spectrum_size() const { return length_ / 2 + 1; }

  template <typename Derived>
  void forward(const Eigen::MatrixBase<Derived>& x, ComplexVector<Scalar>& out) {
    eigen_assert(x.size() <= length_);
    padded_.head(x.size()) = x;
    padded_.tail(length_ - x.size()).setZero();
    fft_.fwd(out, padded_);
  }

  template <typename Derived>
  ComplexVector<Scalar> forward(const Eigen::MatrixBase<Derived>& x) {
    ComplexVector<Scalar> out;
    forward(x, out);
    return out;
  }

  void inverse(const ComplexVector<Scalar>& spectrum, Vector<Scalar>& out) {
    fft_.inv(out, spectrum, length_);
  }

  Vector<Scalar> inverse(const ComplexVector<Scalar>& spectrum) {
    Vector<Scalar> out;
    inverse(spectrum, out);
    return out;
  }

 private:
  int length_;
  Vector<Scalar> padded_;
  Eigen::FFT<Scalar> fft_;
};

}  // namespace faultbp
