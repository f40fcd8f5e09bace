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

#ifndef DPTOMO_PROBE_BASIS_HPP
#define DPTOMO_PROBE_BASIS_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include "dptomo/fock.hpp"

namespace dptomo {

/// Layout of coherent amplitudes on the phase plane.
struct GridSpec {
  enum class Kind { kSquare, kHelical };

  Kind kind = Kind::kSquare;
  int nodes = 6;              // per axis (square) or total (helical)
  double pitch = 0.15;        // square lattice spacing
  double radial_step = 0.016; // helical
  double angular_step = 0.7853981633974483;  // helical, radians

  static GridSpec square(int n, double d);
  static GridSpec helical(int n, double dr, double dphi);

  /// Throws InvalidArgument on out-of-range parameters.
  void validate() const;
};

/// N*N amplitudes d*(j - (N-1)/2) + i*d*(k - (N-1)/2), j outer, k inner.
std::vector<CoherentAmplitude> square_lattice(int n, double d);

/// N amplitudes (k*dr) * exp(i*k*dphi), k = 0..N-1.
std::vector<CoherentAmplitude> helical_grid(int n, double dr, double dphi);

std::vector<CoherentAmplitude> make_grid(const GridSpec& grid);

/// Ordered set of rank-one probe projectors sigma_xi = |v_xi><v_xi|.
///
/// Kets are cached as the columns of a dim x M matrix; the projectors
/// themselves are formed on request.
class ProbeBasis {
 public:
  /// Coherent projectors |alpha><alpha| on a single mode.
  static ProbeBasis single_mode(const std::vector<CoherentAmplitude>& grid, int truncation);

  /// All ordered pairs (alpha_i, alpha_j) of `grid` on two modes; element
  /// index i * grid.size() + j. Requires space.modes == 2.
  static ProbeBasis tensor_basis(const std::vector<CoherentAmplitude>& grid,
                                 const HilbertSpec& space);

  /// Builds the basis a GridSpec describes: single-mode grid, or its
  /// tensor square when space.modes == 2.
  static ProbeBasis from_grid(const GridSpec& grid, const HilbertSpec& space);

  /// Arbitrary normalized kets (one per column). No amplitudes are recorded.
  static ProbeBasis from_kets(const HilbertSpec& space, CMatrix kets);

  const HilbertSpec& space() const { return space_; }
  int size() const { return static_cast<int>(kets_.cols()); }

  /// Per-element amplitudes, one entry per mode. Empty for from_kets bases.
  const std::vector<std::vector<CoherentAmplitude>>& amplitudes() const { return amplitudes_; }

  const CMatrix& kets() const { return kets_; }
  DensityMatrix projector(int xi) const;

  /// G(xi, eta) = Tr(sigma_xi sigma_eta) = |<v_xi|v_eta>|^2.
  RMatrix gram() const;

  /// Single-mode kets (D x n) when every element is a product
  /// a_i (x) a_j over the same factor set; element index i * n + j.
  const std::optional<CMatrix>& mode_factor() const { return mode_factor_; }

 private:
  ProbeBasis(HilbertSpec space, CMatrix kets) : space_(space), kets_(std::move(kets)) {}

  HilbertSpec space_;
  CMatrix kets_;
  std::vector<std::vector<CoherentAmplitude>> amplitudes_;
  std::optional<CMatrix> mode_factor_;
};

/// Writes `xi,mode,re,im` rows for plotting probe layouts.
void write_grid_csv(std::ostream& out, const ProbeBasis& basis);

}  // namespace dptomo

#endif  // DPTOMO_PROBE_BASIS_HPP
