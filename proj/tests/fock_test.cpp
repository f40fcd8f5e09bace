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

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dptomo/fock.hpp"
#include "test_util.hpp"

namespace dptomo {
namespace {

using testing::coherent_overlap;
using testing::kron_loops;

void expect_valid_density(const DensityMatrix& rho) {
  EXPECT_LE(testing::max_hermitian_defect(rho.matrix()), kHermitianTol);
  EXPECT_NEAR(rho.matrix().trace().real(), 1.0, kTraceTol);
  EXPECT_GE(rho.eigenvalues()(0), kPsdFloor);
}

TEST(CoherentAmplitude, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(CoherentAmplitude(nan, 0.0), InvalidArgument);
  EXPECT_THROW(CoherentAmplitude(0.0, inf), InvalidArgument);
  EXPECT_NO_THROW(CoherentAmplitude(0.3, -0.2));
}

TEST(HilbertSpec, ValidatesModesAndTruncation) {
  EXPECT_THROW(HilbertSpec(3, 4), InvalidArgument);
  EXPECT_THROW(HilbertSpec(0, 4), InvalidArgument);
  EXPECT_THROW(HilbertSpec(1, 1), InvalidArgument);
  EXPECT_EQ(HilbertSpec::single(12).dim(), 12);
  EXPECT_EQ(HilbertSpec::two_mode(10).dim(), 100);
}

TEST(PureState, RejectsUnnormalizedVector) {
  CVector v = CVector::Zero(3);
  v(0) = 1.0 + 1e-9;
  EXPECT_THROW(PureState(HilbertSpec::single(3), v), InvalidState);
  v(0) = 1.0;
  EXPECT_NO_THROW(PureState(HilbertSpec::single(3), v));
  EXPECT_THROW(PureState(HilbertSpec::single(4), v), DimensionError);
}

TEST(DensityMatrix, RejectsInvariantViolations) {
  const HilbertSpec s = HilbertSpec::single(2);
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  EXPECT_NO_THROW(DensityMatrix(s, m));

  CMatrix not_herm = m;
  not_herm(0, 1) = Complex(0.0, 1e-9);
  EXPECT_THROW(DensityMatrix(s, not_herm), InvalidState);

  CMatrix bad_trace = m;
  bad_trace(0, 0) = 0.6;
  EXPECT_THROW(DensityMatrix(s, bad_trace), InvalidState);

  CMatrix negative = CMatrix::Zero(2, 2);
  negative(0, 0) = 1.1;
  negative(1, 1) = -0.1;
  EXPECT_THROW(DensityMatrix(s, negative), InvalidState);

  EXPECT_THROW(DensityMatrix(HilbertSpec::single(3), m), DimensionError);
}

TEST(DensityMatrix, PhysicalPartClipsAndRenormalizes) {
  CMatrix m = CMatrix::Zero(3, 3);
  m(0, 0) = 0.8;
  m(1, 1) = 0.4;
  m(2, 2) = -0.2;
  double min_eig = 0.0;
  const DensityMatrix rho = DensityMatrix::physical_part(HilbertSpec::single(3), m, &min_eig);
  EXPECT_DOUBLE_EQ(min_eig, -0.2);
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.8 / 1.2, 1e-14);
  EXPECT_NEAR(rho.matrix()(1, 1).real(), 0.4 / 1.2, 1e-14);
  EXPECT_NEAR(std::abs(rho.matrix()(2, 2)), 0.0, 1e-14);
  EXPECT_THROW(DensityMatrix::physical_part(HilbertSpec::single(3), -m.cwiseAbs().cast<Complex>()),
               InvalidState);
}

TEST(CoherentVector, VacuumIsFirstBasisVector) {
  const PureState v = coherent_vector(CoherentAmplitude(0.0, 0.0), 10);
  ASSERT_EQ(v.vector().size(), 10);
  EXPECT_EQ(v.vector()(0), Complex(1.0, 0.0));
  for (int n = 1; n < 10; ++n) EXPECT_EQ(v.vector()(n), Complex(0.0, 0.0));
}

TEST(CoherentVector, MatchesClosedFormSeries) {
  const PureState v = coherent_vector(CoherentAmplitude(0.5, 0.0), 12);
  // c_0 = exp(-|a|^2 / 2); the renormalization is far below the tolerance.
  EXPECT_NEAR(v.vector()(0).real(), std::exp(-0.125), 1e-12);
  EXPECT_NEAR(std::abs(v.vector()(1) / v.vector()(0) - 0.5), 0.0, 1e-14);
  // Whole series: c_n = e^{-|a|^2/2} a^n / sqrt(n!) for a complex amplitude.
  const Complex a(0.3, -0.4);
  const PureState w = coherent_vector(CoherentAmplitude(a), 12);
  for (int n = 0; n < 12; ++n) {
    const Complex expected =
        std::exp(-0.5 * std::norm(a)) * std::pow(a, n) / std::sqrt(std::tgamma(n + 1.0));
    EXPECT_NEAR(std::abs(w.vector()(n) - expected), 0.0, 1e-12) << "n=" << n;
  }
}

TEST(CoherentVector, OverlapOfOppositeAmplitudes) {
  const CVector a = coherent_vector(CoherentAmplitude(0.5, 0.0), 12).vector();
  const CVector b = coherent_vector(CoherentAmplitude(-0.5, 0.0), 12).vector();
  EXPECT_NEAR(std::norm(b.dot(a)), std::exp(-1.0), 1e-10);
}

TEST(CoherentVector, OverlapOracleOnRandomPairs) {
  std::mt19937_64 gen(20260115);
  std::uniform_real_distribution<double> r(0.0, 1.0);
  std::uniform_real_distribution<double> phi(0.0, 2.0 * M_PI);
  for (int trial = 0; trial < 200; ++trial) {
    const Complex a = std::polar(r(gen), phi(gen));
    const Complex b = std::polar(r(gen), phi(gen));
    const CVector va = coherent_vector(CoherentAmplitude(a), 16).vector();
    const CVector vb = coherent_vector(CoherentAmplitude(b), 16).vector();
    EXPECT_NEAR(std::norm(vb.dot(va)), coherent_overlap(a, b), 1e-8) << a << " " << b;
  }
}

TEST(CoherentVector, RejectsInadequateTruncation) {
  EXPECT_THROW(coherent_vector(CoherentAmplitude(3.0, 0.0), 4), InvalidArgument);
  EXPECT_THROW(coherent_vector(CoherentAmplitude(0.0, 0.0), 1), InvalidArgument);
}

TEST(CoherentVector, RenormalizationNegligibleForProbeAmplitudes) {
  // Probe and measurement amplitudes stay below |alpha| ~ 0.6; the tail
  // removed by truncation is then far below 1e-10 at D = 10.
  for (double r : {0.1, 0.3, 0.45, 0.6}) {
    const Complex a = std::polar(r, 0.7);
    const PureState v = coherent_vector(CoherentAmplitude(a), 10);
    EXPECT_NEAR(v.vector()(0).real(), std::exp(-0.5 * r * r), 1e-10) << r;
  }
}

TEST(NamedState, FockProjector) {
  const DensityMatrix rho = named_state("fock:1", HilbertSpec::single(12));
  ASSERT_EQ(rho.dim(), 12);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      EXPECT_EQ(rho.matrix()(i, j), Complex(i == 1 && j == 1 ? 1.0 : 0.0, 0.0));
    }
  }
}

TEST(NamedState, EvenCatNormalizationMatchesDirectGram) {
  const CVector a = coherent_vector(CoherentAmplitude(0.5, 0.0), 12).vector();
  const CVector b = coherent_vector(CoherentAmplitude(-0.5, 0.0), 12).vector();
  const double norm2 = (a + b).squaredNorm();
  EXPECT_NEAR(norm2, 2.0 * (1.0 + std::exp(-0.5)), 1e-10);

  const DensityMatrix rho = named_state("even_cat:0.5", HilbertSpec::single(12));
  const CVector psi = (a + b) / std::sqrt(norm2);
  EXPECT_NEAR((rho.matrix() - psi * psi.adjoint()).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  // Only even Fock levels are populated.
  for (int n = 1; n < 12; n += 2) EXPECT_NEAR(std::abs(rho.matrix()(n, n)), 0.0, 1e-15);
}

TEST(NamedState, MixedFamilySpectrum) {
  const DensityMatrix rho = named_state("mix01:p=0.3", HilbertSpec::single(12));
  const RVector w = rho.eigenvalues();
  EXPECT_NEAR(w(11), 0.7, 1e-14);
  EXPECT_NEAR(w(10), 0.3, 1e-14);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(w(i), 0.0, 1e-14);
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 0.3, 0.0);
}

TEST(NamedState, TwoModeFamilies) {
  const HilbertSpec s = HilbertSpec::two_mode(10);
  const DensityMatrix psi = named_state("bell_psi", s);
  EXPECT_NEAR(psi.matrix()(1, 1).real(), 0.5, 1e-15);    // |01>
  EXPECT_NEAR(psi.matrix()(10, 10).real(), 0.5, 1e-15);  // |10>
  EXPECT_NEAR(psi.matrix()(1, 10).real(), 0.5, 1e-15);
  const DensityMatrix phi = named_state("bell_phi", s);
  EXPECT_NEAR(phi.matrix()(0, 11).real(), 0.5, 1e-15);  // |00><11|

  // Entangled cat: (|a,-a> + |-a,a>) / N with N^2 = 2 (1 + e^{-4|a|^2}).
  const CVector p = coherent_vector(CoherentAmplitude(0.5, 0.0), 10).vector();
  const CVector m = coherent_vector(CoherentAmplitude(-0.5, 0.0), 10).vector();
  const CMatrix pm = kron_loops(p, m);
  const CMatrix mp = kron_loops(m, p);
  const CVector v = pm.col(0) + mp.col(0);
  EXPECT_NEAR(v.squaredNorm(), 2.0 * (1.0 + std::exp(-1.0)), 1e-10);
  const DensityMatrix cat = named_state("entangled_cat:0.5", s);
  const CVector psi_cat = v.normalized();
  EXPECT_NEAR((cat.matrix() - psi_cat * psi_cat.adjoint()).cwiseAbs().maxCoeff(), 0.0, 1e-12);

  const DensityMatrix mix = named_state("bell_mix:p=0.25", s);
  EXPECT_NEAR((mix.matrix() - (0.75 * psi.matrix() + 0.25 * phi.matrix())).cwiseAbs().maxCoeff(),
              0.0, 1e-15);

  const DensityMatrix prod = named_state("product:fock:1|coherent:0.2", s);
  EXPECT_NEAR((prod.matrix() - tensor(named_state("fock:1", HilbertSpec::single(10)),
                                      named_state("coherent:0.2", HilbertSpec::single(10)))
                                   .matrix())
                  .cwiseAbs()
                  .maxCoeff(),
              0.0, 1e-15);
}

TEST(NamedState, EveryFamilySatisfiesInvariants) {
  for (const char* spec : {"fock:0", "fock:3", "coherent:0.5", "coherent:0.2,-0.3", "even_cat:0.5",
                           "superpos01", "mix01:p=0", "mix01:p=1", "mix01:0.4"}) {
    SCOPED_TRACE(spec);
    expect_valid_density(named_state(spec, HilbertSpec::single(12)));
  }
  for (const char* spec : {"bell_psi", "bell_phi", "bell_mix:p=0.5", "entangled_cat:0.5",
                           "product:superpos01|fock:2"}) {
    SCOPED_TRACE(spec);
    expect_valid_density(named_state(spec, HilbertSpec::two_mode(10)));
  }
}

TEST(NamedState, RejectsUnknownOrOutOfRange) {
  const HilbertSpec one = HilbertSpec::single(12);
  EXPECT_THROW(named_state("squeezed:0.1", one), InvalidArgument);
  EXPECT_THROW(named_state("fock:12", one), InvalidArgument);
  EXPECT_THROW(named_state("fock:1.5", one), InvalidArgument);
  EXPECT_THROW(named_state("mix01:p=1.5", one), InvalidArgument);
  EXPECT_THROW(named_state("coherent:abc", one), InvalidArgument);
  EXPECT_THROW(named_state("coherent:5.0", one), InvalidArgument);  // truncation too small
  EXPECT_THROW(named_state("bell_psi", one), InvalidArgument);
  EXPECT_THROW(named_state("fock:1", HilbertSpec::two_mode(4)), InvalidArgument);
  EXPECT_THROW(named_state("product:fock:1", HilbertSpec::two_mode(4)), InvalidArgument);
}

TEST(Tensor, VacuumProduct) {
  const DensityMatrix v = testing::fock_projector(0, 4);
  const DensityMatrix vv = tensor(v, v);
  EXPECT_EQ(vv.space(), HilbertSpec::two_mode(4));
  EXPECT_EQ(vv.matrix()(0, 0), Complex(1.0, 0.0));
  EXPECT_NEAR(vv.matrix().cwiseAbs().sum(), 1.0, 0.0);
}

TEST(Tensor, IndexConventionAndTrace) {
  std::mt19937_64 gen(7);
  const HilbertSpec s = HilbertSpec::single(3);
  const DensityMatrix a = testing::random_state(gen, s, 2);
  const DensityMatrix b = testing::random_state(gen, s, 3);
  const DensityMatrix ab = tensor(a, b);
  EXPECT_NEAR((ab.matrix() - kron_loops(a.matrix(), b.matrix())).cwiseAbs().maxCoeff(), 0.0,
              1e-15);
  EXPECT_NEAR(ab.matrix().trace().real(), 1.0, 1e-12);
  // |1>|0> sits at composite index 1 * D + 0.
  const DensityMatrix e = tensor(testing::fock_projector(1, 3), testing::fock_projector(0, 3));
  EXPECT_EQ(e.matrix()(3, 3), Complex(1.0, 0.0));
}

TEST(Tensor, ThreeFoldFlatteningIsAssociative) {
  std::mt19937_64 gen(11);
  const HilbertSpec s = HilbertSpec::single(2);
  const CMatrix a = testing::random_state(gen, s, 2).matrix();
  const CMatrix b = testing::random_state(gen, s, 2).matrix();
  const CMatrix c = testing::random_state(gen, s, 1).matrix();
  const CMatrix ab = tensor(DensityMatrix(s, a), DensityMatrix(s, b)).matrix();
  const CMatrix left = kron_loops(ab, c);
  const CMatrix right = kron_loops(a, kron_loops(b, c));
  EXPECT_NEAR((left - right).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Tensor, RejectsMixedDimensions) {
  EXPECT_THROW(tensor(testing::fock_projector(0, 3), testing::fock_projector(0, 4)),
               DimensionError);
  const DensityMatrix two = named_state("bell_psi", HilbertSpec::two_mode(3));
  EXPECT_THROW(tensor(two, testing::fock_projector(0, 3)), DimensionError);
}

TEST(PartialTranspose, ProductStateIsPpt) {
  std::mt19937_64 gen(3);
  const HilbertSpec s = HilbertSpec::single(4);
  const DensityMatrix rho = tensor(testing::random_state(gen, s, 2), testing::random_state(gen, s, 3));
  EXPECT_GE(hermitian_eigenvalues(partial_transpose(rho))(0), -1e-10);
}

TEST(PartialTranspose, IsAnInvolutionPreservingTraceAndHermiticity) {
  std::mt19937_64 gen(5);
  const DensityMatrix rho = testing::random_state(gen, HilbertSpec::two_mode(3), 4);
  const CMatrix pt = partial_transpose(rho);
  EXPECT_LE(testing::max_hermitian_defect(pt), 1e-15);
  EXPECT_NEAR(pt.trace().real(), 1.0, 1e-12);
  EXPECT_EQ(partial_transpose(pt, 3), rho.matrix());
}

TEST(PartialTranspose, BellStateHasNegativeEigenvalue) {
  const DensityMatrix psi = named_state("bell_psi", HilbertSpec::two_mode(4));
  EXPECT_NEAR(hermitian_eigenvalues(partial_transpose(psi))(0), -0.5, 1e-12);
}

TEST(PartialTranspose, RejectsSingleMode) {
  EXPECT_THROW(partial_transpose(testing::fock_projector(0, 4)), DimensionError);
}

TEST(DensityCsv, RoundTripsExactly) {
  std::mt19937_64 gen(9);
  const DensityMatrix rho = testing::random_state(gen, HilbertSpec::two_mode(3), 3);
  std::stringstream ss;
  write_density_csv(ss, rho);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header, "9,2,3");
  const DensityMatrix back = read_density_csv(ss);
  EXPECT_EQ(back.space(), rho.space());
  EXPECT_EQ(back.matrix(), rho.matrix());
}

TEST(DensityCsv, RejectsMalformedInput) {
  std::stringstream bad("2,1,2\n1,0,0\n");
  EXPECT_THROW(read_density_csv(bad), Error);
}

}  // namespace
}  // namespace dptomo
