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

#include "dptomo/witness.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace dptomo {
namespace {

CMatrix hermitian_pt(const DensityMatrix& rho) {
  if (rho.space().modes != 2) throw DimensionError("witness needs a two-mode state");
  CMatrix pt = partial_transpose(rho);
  return 0.5 * (pt + pt.adjoint());
}

}  // namespace

WitnessReport build_witness(const DensityMatrix& rho) {
  const CMatrix pt = hermitian_pt(rho);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(pt);
  const RVector& w = es.eigenvalues();
  const CVector eta = es.eigenvectors().col(0);

  WitnessReport r;
  r.witness = partial_transpose(CMatrix(eta * eta.adjoint()), rho.space().truncation);
  r.witness = 0.5 * (r.witness + r.witness.adjoint()).eval();
  r.min_pt_eigenvalue = w(0);
  r.trace_value = evaluate_witness(r.witness, rho);
  r.negativity = -w.cwiseMin(0.0).sum();
  r.detected = r.trace_value < -kDetectionTol;
  return r;
}

double evaluate_witness(const CMatrix& w, const DensityMatrix& rho) {
  if (w.rows() != rho.dim() || w.cols() != rho.dim()) {
    throw DimensionError("witness and state dimensions differ");
  }
  if ((w - w.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
    throw InvalidArgument("witness is not Hermitian");
  }
  // Tr(W rho) = sum_ij W_ij rho_ji
  const Complex t = w.cwiseProduct(rho.matrix().transpose()).sum();
  if (std::abs(t.imag()) > 1e-10) {
    throw InvalidArgument("Tr(W rho) has an imaginary residue");
  }
  return t.real();
}

double negativity(const DensityMatrix& rho) {
  const RVector w = hermitian_eigenvalues(hermitian_pt(rho));
  return -w.cwiseMin(0.0).sum();
}

}  // namespace dptomo
