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

// Constrained least-squares fits of probe mixtures rho ~ sum_xi x_xi sigma_xi.
//
// Both fits minimize a convex quadratic in x subject to
//
//   x real,  sum_xi x_xi = 1,  sum_xi x_xi sigma_xi >= 0,  |x_xi| <= bound.
//
// The solver is ADMM on the splitting
//
//   minimize  f(x) + I_box(z) + I_spectraplex(Z)
//   s.t.      gamma (x - z) = 0,   S x - Z = 0,
//
// where S x = sum x_xi sigma_xi. Because every sigma_xi has unit trace,
// sum x = Tr(S x), so the affine constraint rides along with the PSD block:
// the Z-update projects onto {Z >= 0, Tr Z = 1} by eigendecomposition and
// a simplex projection of the spectrum. The x-update solves
//
//   (H + rho G + (rho gamma^2 + tikhonov) I) x = c + rho gamma^2 (z - u) + rho S^T (Z - U)
//
// with G the probe Gram matrix, by a cached Cholesky factor that is rebuilt
// only when the penalty changes. The box block is down-weighted by gamma so
// its identity term does not swamp the (very ill-conditioned) Gram matrix.

#ifndef DPTOMO_CONVEX_FIT_HPP
#define DPTOMO_CONVEX_FIT_HPP

#include <iosfwd>
#include <vector>

#include "dptomo/measurement.hpp"
#include "dptomo/probe_basis.hpp"

namespace dptomo {

struct SolverConfig {
  double coeff_bound = 1000.0;
  int max_iterations = 5000;
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
  double admm_penalty = 1.0;

  // Residual balancing: every `adapt_interval` iterations the penalty is
  // multiplied or divided by `adapt_factor` when one residual exceeds the
  // other by `adapt_ratio`.
  double adapt_factor = 2.0;
  double adapt_ratio = 10.0;
  int adapt_interval = 25;

  double relaxation = 1.6;     // over-relaxation in (0, 2)
  double box_scaling = 1e-4;   // gamma
  double tikhonov = 1e-12;     // added to the x-update diagonal

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct FitResult {
  RVector coefficients;
  double objective = 0.0;  // squared HS distance or E[x]
  int iterations = 0;
  bool converged = false;

  // max(|sum x - 1|, -lambda_min(sum x sigma), max(0, max|x| - bound))
  double constraint_violation = 0.0;
  double sum_deviation = 0.0;
  double min_eigenvalue = 0.0;  // of sum x sigma, before any clipping
  double box_excess = 0.0;

  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double final_penalty = 0.0;
  double tikhonov = 0.0;
};

/// Minimizes ||target - sum x sigma||_HS^2.
FitResult fit_state(const DensityMatrix& target, const ProbeBasis& basis,
                    const SolverConfig& cfg = {});

/// Minimizes sum_j (f_j - sum_xi x_xi f^xi_j)^2, with probe_patterns[xi]
/// aligned with basis element xi.
FitResult fit_pattern(const DataPattern& signal, const std::vector<DataPattern>& probe_patterns,
                      const ProbeBasis& basis, const SolverConfig& cfg = {});

/// Same, with the probe patterns as the columns of a K x M matrix.
FitResult fit_pattern(const DataPattern& signal, const RMatrix& probe_matrix,
                      const ProbeBasis& basis, const SolverConfig& cfg = {});

/// A mixture made physical.
struct Assembly {
  DensityMatrix state;
  double min_eigenvalue = 0.0;  // before clipping
  double trace = 0.0;           // before renormalization
};

/// sum x_xi sigma_xi with negative eigenvalues clipped to zero and the trace
/// renormalized to one.
Assembly assemble(const RVector& x, const ProbeBasis& basis);

/// The raw mixture sum x_xi sigma_xi (Hermitian, not clipped).
CMatrix mixture(const RVector& x, const ProbeBasis& basis);

/// Diagnostics header lines (`# key=value`) followed by `xi,x` rows.
void write_fit_csv(std::ostream& out, const FitResult& fit);

}  // namespace dptomo

#endif  // DPTOMO_CONVEX_FIT_HPP
