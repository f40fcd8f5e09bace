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

// Decomposable entanglement witnesses from the partial transpose.
//
// For a two-mode state with partial transpose rho^T2 whose smallest
// eigenpair is (lambda, |eta>), W = (|eta><eta|)^T2 satisfies
// Tr(W rho) = <eta| rho^T2 |eta> = lambda, while Tr(W sigma) >= 0 for every
// separable sigma. W has unit trace because partial transposition
// preserves the trace.

#ifndef DPTOMO_WITNESS_HPP
#define DPTOMO_WITNESS_HPP

#include "dptomo/fock.hpp"

namespace dptomo {

/// Tr(W rho) below -kDetectionTol counts as a detection.
inline constexpr double kDetectionTol = 1e-8;

struct WitnessReport {
  CMatrix witness;
  double trace_value = 0.0;        // Tr(W rho) for the state W was built from
  double min_pt_eigenvalue = 0.0;  // smallest eigenvalue of rho^T2
  double negativity = 0.0;
  bool detected = false;
};

/// Throws DimensionError for single-mode input.
WitnessReport build_witness(const DensityMatrix& rho);

/// Re Tr(W rho). Throws DimensionError on size mismatch and InvalidArgument
/// when W is not Hermitian (1e-12) or the trace has an imaginary residue
/// above 1e-10.
double evaluate_witness(const CMatrix& w, const DensityMatrix& rho);

/// Sum of |negative eigenvalues| of rho^T2.
double negativity(const DensityMatrix& rho);

}  // namespace dptomo

#endif  // DPTOMO_WITNESS_HPP
