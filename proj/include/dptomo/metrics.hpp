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

#ifndef DPTOMO_METRICS_HPP
#define DPTOMO_METRICS_HPP

#include "dptomo/fock.hpp"

namespace dptomo {

/// Uhlmann fidelity Tr sqrt(sqrt(a) b sqrt(a)), clamped to [0, 1].
///
/// Eigenvalues in [-1e-8, 0) are treated as zero; anything lower means the
/// input is unphysical and raises InvalidState.
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// Tr(rho^2), evaluated from the spectrum.
double purity(const DensityMatrix& rho);

/// Tr(rho^2) evaluated from matrix entries (sum of |rho_ij|^2).
double purity_from_entries(const DensityMatrix& rho);

/// Hilbert-Schmidt (Frobenius) distance.
double hs_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Quality of `approx` as a stand-in for `target`.
struct MetricReport {
  double fidelity = 0.0;
  double purity = 0.0;  // of approx
  double hs_distance = 0.0;
  double min_eigenvalue = 0.0;  // of approx
};

MetricReport compare(const DensityMatrix& target, const DensityMatrix& approx);

/// Eigenvalues below this are an error in fidelity().
inline constexpr double kFidelityEigenFloor = -1e-8;

/// Eigenvalues of sqrt(a) b sqrt(a) at or below this are treated as round-off.
inline constexpr double kFidelityNoiseFloor = 1e-14;

}  // namespace dptomo

#endif  // DPTOMO_METRICS_HPP
