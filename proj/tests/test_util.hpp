// Copyright 2026 The dptomo Authors
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

// Helpers shared by the test binaries. Everything here is written from
// first principles (explicit loops, closed forms) so it can serve as an
// oracle independent of the library internals.

#ifndef DPTOMO_TESTS_TEST_UTIL_HPP
#define DPTOMO_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <complex>
#include <random>

#include "dptomo/fock.hpp"

namespace dptomo::testing {

/// Closed-form |<beta|alpha>|^2 = exp(-|alpha - beta|^2).
inline double coherent_overlap(Complex a, Complex b) { return std::exp(-std::norm(a - b)); }

/// Kronecker product by explicit index arithmetic: row (i*rb + k).
inline CMatrix kron_loops(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

inline CVector random_ket(std::mt19937_64& gen, Eigen::Index dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  CVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(n(gen), n(gen));
  return v.normalized();
}

/// Random density matrix of the given rank: sum of random projectors with
/// random positive weights.
inline DensityMatrix random_state(std::mt19937_64& gen, const HilbertSpec& space, int rank) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const auto dim = space.dim();
  CMatrix m = CMatrix::Zero(dim, dim);
  double total = 0.0;
  for (int r = 0; r < rank; ++r) {
    const CVector v = random_ket(gen, dim);
    const double w = u(gen);
    m += w * v * v.adjoint();
    total += w;
  }
  m /= total;
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(space, m);
}

inline DensityMatrix random_pure(std::mt19937_64& gen, const HilbertSpec& space) {
  return random_state(gen, space, 1);
}

/// |n><n| on a single mode.
inline DensityMatrix fock_projector(int n, int d) {
  CMatrix m = CMatrix::Zero(d, d);
  m(n, n) = 1.0;
  return DensityMatrix(HilbertSpec::single(d), m);
}

inline double max_hermitian_defect(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace dptomo::testing

#endif  // DPTOMO_TESTS_TEST_UTIL_HPP
