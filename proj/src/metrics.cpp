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

#include "dptomo/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dptomo {
namespace {

void require_same_space(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.space() == b.space())) {
    throw DimensionError("states live on different Hilbert spaces");
  }
}

RVector checked_spectrum(const RVector& w) {
  if (w.size() > 0 && w(0) < kFidelityEigenFloor) {
    throw InvalidState("eigenvalue " + std::to_string(w(0)) + " below fidelity floor");
  }
  return w.cwiseMax(0.0);
}

}  // namespace

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_space(a, b);
  Eigen::SelfAdjointEigenSolver<CMatrix> ea(a.matrix());
  const RVector wa = checked_spectrum(ea.eigenvalues());
  checked_spectrum(b.eigenvalues());
  const CMatrix& q = ea.eigenvectors();
  const CMatrix sqrt_a = q * wa.cwiseSqrt().asDiagonal() * q.adjoint();
  CMatrix inner = sqrt_a * b.matrix() * sqrt_a;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> ei(inner, Eigen::EigenvaluesOnly);
  // Rank-deficient operands leave round-off eigenvalues of order 1e-16 in
  // `inner`; their square roots (1e-8) would otherwise leak into F.
  const double f = (ei.eigenvalues().array() > kFidelityNoiseFloor)
                       .select(ei.eigenvalues().array().sqrt(), 0.0)
                       .sum();
  return std::clamp(f, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) { return rho.eigenvalues().squaredNorm(); }

double purity_from_entries(const DensityMatrix& rho) { return rho.matrix().squaredNorm(); }

double hs_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_space(a, b);
  return (a.matrix() - b.matrix()).norm();
}

MetricReport compare(const DensityMatrix& target, const DensityMatrix& approx) {
  MetricReport r;
  r.fidelity = fidelity(target, approx);
  const RVector w = approx.eigenvalues();
  r.purity = w.squaredNorm();
  r.min_eigenvalue = w(0);
  r.hs_distance = hs_distance(target, approx);
  return r;
}

}  // namespace dptomo
