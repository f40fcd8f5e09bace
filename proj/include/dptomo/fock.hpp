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

// States and operators on truncated single- and two-mode Fock spaces.
//
// Composite index convention for two modes: |n1, n2> sits at n1 * D + n2.

#ifndef DPTOMO_FOCK_HPP
#define DPTOMO_FOCK_HPP

#include <iosfwd>
#include <string_view>

#include "dptomo/types.hpp"

namespace dptomo {

/// Complex amplitude of a coherent state. Always finite.
class CoherentAmplitude {
 public:
  CoherentAmplitude() = default;
  CoherentAmplitude(double re, double im);
  explicit CoherentAmplitude(Complex z) : CoherentAmplitude(z.real(), z.imag()) {}

  double re() const { return re_; }
  double im() const { return im_; }
  Complex value() const { return {re_, im_}; }
  double norm2() const { return re_ * re_ + im_ * im_; }

  friend bool operator==(const CoherentAmplitude&, const CoherentAmplitude&) = default;

 private:
  double re_ = 0.0;
  double im_ = 0.0;
};

/// One or two bosonic modes, each truncated to Fock levels 0..truncation-1.
struct HilbertSpec {
  int modes = 1;
  int truncation = 12;

  HilbertSpec() = default;
  HilbertSpec(int modes, int truncation);

  static HilbertSpec single(int truncation) { return {1, truncation}; }
  static HilbertSpec two_mode(int truncation) { return {2, truncation}; }

  int dim() const { return modes == 1 ? truncation : truncation * truncation; }

  friend bool operator==(const HilbertSpec&, const HilbertSpec&) = default;
};

/// Unit-norm state vector.
class PureState {
 public:
  /// Throws InvalidState unless |vector| = 1 to 1e-12.
  PureState(HilbertSpec space, CVector vector);

  const HilbertSpec& space() const { return space_; }
  const CVector& vector() const { return vector_; }

 private:
  HilbertSpec space_;
  CVector vector_;
};

/// Hermitian, unit-trace, positive-semidefinite matrix.
class DensityMatrix {
 public:
  /// Validates every invariant; throws InvalidState on violation.
  DensityMatrix(HilbertSpec space, CMatrix entries);

  static DensityMatrix from_pure(const PureState& psi);

  /// Hermitizes, clips negative eigenvalues to zero and renormalizes the
  /// trace. `min_eigenvalue`, when given, receives the eigenvalue floor
  /// before clipping. Throws InvalidState if the trace is not positive.
  static DensityMatrix physical_part(HilbertSpec space, const CMatrix& m,
                                     double* min_eigenvalue = nullptr);

  const HilbertSpec& space() const { return space_; }
  const CMatrix& matrix() const { return entries_; }
  Eigen::Index dim() const { return entries_.rows(); }

  /// Ascending eigenvalues.
  RVector eigenvalues() const;

 private:
  HilbertSpec space_;
  CMatrix entries_;
};

/// Ascending eigenvalues of the Hermitian part of `m`.
RVector hermitian_eigenvalues(const CMatrix& m);

/// Truncated Fock expansion of |alpha>, renormalized to unit norm.
/// Throws InvalidArgument if D < 2 or the probability mass beyond level D-1
/// exceeds 1e-8.
PureState coherent_vector(CoherentAmplitude alpha, int truncation);

/// Largest truncation-tail mass accepted by coherent_vector.
inline constexpr double kMaxTailMass = 1e-8;

/// Density matrix of a named state family.
///
/// Single mode: `fock:n`, `coherent:re[,im]`, `even_cat:a`, `superpos01`,
/// `mix01:p=P`. Two modes: `bell_psi`, `bell_phi`, `entangled_cat:a`,
/// `bell_mix:p=P`, and `product:<spec>|<spec>` for product states.
DensityMatrix named_state(std::string_view spec, const HilbertSpec& space);

/// Two-mode state a (x) b from single-mode states of equal truncation.
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
PureState tensor(const PureState& a, const PureState& b);

/// Transpose on the second mode: A[(n1,n2),(m1,m2)] -> A[(n1,m2),(m1,n2)].
CMatrix partial_transpose(const CMatrix& m, int truncation);
CMatrix partial_transpose(const DensityMatrix& rho);

/// Writes `dim,modes,truncation` then one row per matrix row of interleaved
/// re,im pairs.
void write_density_csv(std::ostream& out, const DensityMatrix& rho);
DensityMatrix read_density_csv(std::istream& in);

}  // namespace dptomo

#endif  // DPTOMO_FOCK_HPP
