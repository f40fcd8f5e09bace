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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "dptomo/convex_fit.hpp"
#include "dptomo/measurement.hpp"
#include "dptomo/metrics.hpp"
#include "qubit_oracle.hpp"
#include "test_util.hpp"

namespace dptomo {
namespace {

CMatrix random_kets(std::mt19937_64& gen, int dim, int count) {
  CMatrix k(dim, count);
  for (int i = 0; i < count; ++i) k.col(i) = testing::random_ket(gen, dim);
  return k;
}

ProbeBasis small_lattice_basis(int n = 3, double d = 0.15) {
  return ProbeBasis::from_grid(GridSpec::square(n, d), HilbertSpec::single(12));
}

RVector uniform(int m) { return RVector::Constant(m, 1.0 / m); }

double hs2(const CMatrix& a, const CMatrix& b) { return (a - b).squaredNorm(); }

TEST(FitState, OracleAgreementOnQubitInstances) {
  std::mt19937_64 gen(4242);
  const HilbertSpec s = HilbertSpec::single(2);
  int checked = 0;
  for (int m = 2; m <= 4; ++m) {
    for (int trial = 0; trial < 6; ++trial) {
      const CMatrix kets = random_kets(gen, 2, m);
      const DensityMatrix target = testing::random_state(gen, s, 1 + trial % 2);
      const ProbeBasis basis = ProbeBasis::from_kets(s, kets);
      const FitResult fit = fit_state(target, basis);
      const double oracle = testing::QubitOracle(kets, target.matrix()).minimize();
      SCOPED_TRACE(::testing::Message() << "M=" << m << " trial=" << trial);
      ASSERT_TRUE(std::isfinite(oracle));
      if (fit.coefficients.cwiseAbs().maxCoeff() > 3.0) continue;  // outside the scanned box
      EXPECT_NEAR(fit.objective, oracle, 1e-5);
      EXPECT_NEAR(fit.objective, hs2(mixture(fit.coefficients, basis), target.matrix()), 1e-12);
      ++checked;
    }
  }
  EXPECT_GE(checked, 12);
}

TEST(FitState, IndicatorForTargetOnGridNode) {
  const ProbeBasis basis = small_lattice_basis();
  for (int k : {0, 4, 8}) {
    const DensityMatrix target = basis.projector(k);
    const FitResult fit = fit_state(target, basis);
    RVector e = RVector::Zero(basis.size());
    e(k) = 1.0;
    EXPECT_LE((fit.coefficients - e).cwiseAbs().maxCoeff(), 1e-4) << k;
    EXPECT_NEAR(fidelity(target, assemble(fit.coefficients, basis).state), 1.0, 1e-8) << k;
  }
}

TEST(FitState, SingleElementBasisIsTrivial) {
  const ProbeBasis basis = ProbeBasis::single_mode({CoherentAmplitude(0.1, 0.0)}, 12);
  const FitResult fit = fit_state(named_state("fock:1", HilbertSpec::single(12)), basis);
  ASSERT_EQ(fit.coefficients.size(), 1);
  EXPECT_EQ(fit.coefficients(0), 1.0);
  EXPECT_TRUE(fit.converged);
}

TEST(FitState, FeasibleWhenConvergedAndNeverWorseThanUniform) {
  std::mt19937_64 gen(77);
  const HilbertSpec s = HilbertSpec::single(3);
  for (int trial = 0; trial < 10; ++trial) {
    const ProbeBasis basis = ProbeBasis::from_kets(s, random_kets(gen, 3, 6));
    const DensityMatrix target = testing::random_state(gen, s, 1 + trial % 3);
    const FitResult fit = fit_state(target, basis);
    const double uniform_obj = hs2(mixture(uniform(basis.size()), basis), target.matrix());
    EXPECT_LE(fit.objective, uniform_obj + 1e-12) << trial;
    if (fit.converged) {
      const SolverConfig cfg;
      EXPECT_LE(fit.constraint_violation, 10.0 * cfg.primal_tol) << trial;
      EXPECT_NEAR(fit.coefficients.sum(), 1.0, cfg.primal_tol);
      EXPECT_LE(fit.coefficients.cwiseAbs().maxCoeff(), cfg.coeff_bound + cfg.primal_tol);
    }
  }
  // Coherent-state targets on a lattice are never worse than uniform either.
  const ProbeBasis basis = small_lattice_basis(6, 0.15);
  for (const char* spec : {"fock:1", "even_cat:0.5"}) {
    const DensityMatrix target = named_state(spec, HilbertSpec::single(12));
    const FitResult fit = fit_state(target, basis);
    EXPECT_LE(fit.objective, hs2(mixture(uniform(basis.size()), basis), target.matrix())) << spec;
  }
}

TEST(FitState, DiagnosticsAreConsistent) {
  const ProbeBasis basis = small_lattice_basis();
  const DensityMatrix target = named_state("coherent:0.1,0.05", HilbertSpec::single(12));
  const FitResult fit = fit_state(target, basis);
  EXPECT_NEAR(fit.sum_deviation, std::abs(fit.coefficients.sum() - 1.0), 1e-15);
  const double lmin = hermitian_eigenvalues(mixture(fit.coefficients, basis))(0);
  EXPECT_NEAR(fit.min_eigenvalue, lmin, 1e-12);
  EXPECT_GE(fit.constraint_violation, fit.sum_deviation);
  EXPECT_GE(fit.constraint_violation, -fit.min_eigenvalue);
  EXPECT_EQ(fit.tikhonov, SolverConfig{}.tikhonov);
  EXPECT_GT(fit.final_penalty, 0.0);
}

TEST(FitState, BitwiseDeterministic) {
  const ProbeBasis basis = small_lattice_basis(6, 0.15);
  const DensityMatrix target = named_state("superpos01", HilbertSpec::single(12));
  SolverConfig cfg;
  cfg.max_iterations = 400;
  const FitResult a = fit_state(target, basis, cfg);
  const FitResult b = fit_state(target, basis, cfg);
  ASSERT_EQ(a.coefficients.size(), b.coefficients.size());
  for (Eigen::Index i = 0; i < a.coefficients.size(); ++i) {
    EXPECT_EQ(a.coefficients(i), b.coefficients(i));
  }
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(FitState, NonConvergenceReturnsBestIterate) {
  const ProbeBasis basis = small_lattice_basis(6, 0.15);
  const DensityMatrix target = named_state("fock:1", HilbertSpec::single(12));
  SolverConfig cfg;
  cfg.max_iterations = 5;
  const FitResult fit = fit_state(target, basis, cfg);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.iterations, 5);
  EXPECT_TRUE(fit.coefficients.allFinite());
  EXPECT_NEAR(fit.coefficients.sum(), 1.0, 1e-12);
  EXPECT_GT(fit.primal_residual + fit.dual_residual, 0.0);
}

TEST(FitState, KroneckerPathMatchesGenericPath) {
  const HilbertSpec s = HilbertSpec::two_mode(6);
  const ProbeBasis kron = ProbeBasis::from_grid(GridSpec::square(2, 0.2), s);
  const ProbeBasis generic = ProbeBasis::from_kets(s, kron.kets());
  ASSERT_TRUE(kron.mode_factor().has_value());
  const DensityMatrix target = named_state("bell_psi", s);
  SolverConfig cfg;
  cfg.max_iterations = 20000;
  const FitResult a = fit_state(target, kron, cfg);
  const FitResult b = fit_state(target, generic, cfg);
  EXPECT_NEAR(a.objective, b.objective, 1e-6);
  const double fa = fidelity(target, assemble(a.coefficients, kron).state);
  const double fb = fidelity(target, assemble(b.coefficients, generic).state);
  EXPECT_NEAR(fa, fb, 1e-4);
}

TEST(FitState, RejectsInvalidInput) {
  const ProbeBasis basis = small_lattice_basis();
  EXPECT_THROW(fit_state(named_state("fock:1", HilbertSpec::single(10)), basis), DimensionError);
  SolverConfig cfg;
  cfg.primal_tol = 0.0;
  EXPECT_THROW(fit_state(named_state("fock:1", HilbertSpec::single(12)), basis, cfg),
               InvalidArgument);
}

TEST(SolverConfig, ValidationNamesTheField) {
  auto message = [](SolverConfig cfg) {
    try {
      cfg.validate();
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  SolverConfig c;
  EXPECT_EQ(message(c), "");
  c.coeff_bound = -1.0;
  EXPECT_NE(message(c).find("coeff_bound"), std::string::npos);
  c = {};
  c.max_iterations = 0;
  EXPECT_NE(message(c).find("max_iterations"), std::string::npos);
  c = {};
  c.dual_tol = std::nan("");
  EXPECT_NE(message(c).find("dual_tol"), std::string::npos);
  c = {};
  c.admm_penalty = 0.0;
  EXPECT_NE(message(c).find("admm_penalty"), std::string::npos);
  c = {};
  c.relaxation = 2.0;
  EXPECT_NE(message(c).find("relaxation"), std::string::npos);
  c = {};
  c.tikhonov = -1e-12;
  EXPECT_NE(message(c).find("tikhonov"), std::string::npos);
}

TEST(FitPattern, ExactPatternsOfAProbeRecoverTheIndicator) {
  const ProbeBasis basis = small_lattice_basis();
  const MeasurementSet meas(basis);
  const auto probes = probe_patterns(basis, meas, 0, 1);
  for (int k : {1, 4}) {
    const DataPattern sig = probabilities(basis.projector(k), meas);
    const FitResult fit = fit_pattern(sig, probes, basis);
    EXPECT_LE(fit.objective, 1e-12) << k;
    EXPECT_NEAR(fit.coefficients(k), 1.0, 1e-4) << k;
  }
}

TEST(FitPattern, MatrixAndListFormsAgree) {
  const ProbeBasis basis = small_lattice_basis();
  const MeasurementSet meas(basis);
  const auto probes = probe_patterns(basis, meas, 1000, 3);
  const DataPattern sig = signal_pattern(named_state("fock:1", HilbertSpec::single(12)), meas, 1000, 3);
  RMatrix fm(meas.size(), basis.size());
  for (int xi = 0; xi < basis.size(); ++xi) fm.col(xi) = probes[xi].values;
  const FitResult a = fit_pattern(sig, probes, basis);
  const FitResult b = fit_pattern(sig, fm, basis);
  EXPECT_EQ(a.coefficients, b.coefficients);
  // Objective equals the least-squares residual of the reported coefficients.
  EXPECT_NEAR(a.objective, (sig.values - fm * a.coefficients).squaredNorm(), 1e-14);
}

// For targets inside the probe span, the exact-pattern fit and the direct
// fit both reach zero objective.
TEST(FitPattern, ExactModeMatchesFitStateForTargetsInSpan) {
  const ProbeBasis basis = small_lattice_basis();
  const MeasurementSet meas(basis);
  RVector y = RVector::Zero(basis.size());
  y(0) = 0.2;
  y(4) = 0.5;
  y(7) = 0.3;
  const DensityMatrix target = assemble(y, basis).state;
  const FitResult direct = fit_state(target, basis);
  const FitResult pattern =
      fit_pattern(probabilities(target, meas), probe_patterns(basis, meas, 0, 0), basis);
  EXPECT_LE(direct.objective, 1e-10);
  EXPECT_LE(pattern.objective, 1e-10);
  EXPECT_NEAR(direct.objective, pattern.objective, 1e-10);
  // A pattern residual of 1e-10 still leaves state-space freedom along the
  // weakly observed directions of the probe Gram matrix.
  EXPECT_NEAR(fidelity(assemble(direct.coefficients, basis).state,
                       assemble(pattern.coefficients, basis).state),
              1.0, 1e-4);
}

TEST(FitPattern, RejectsShapeMismatch) {
  const ProbeBasis basis = small_lattice_basis();
  const MeasurementSet meas(basis);
  auto probes = probe_patterns(basis, meas, 0, 0);
  const DataPattern sig = probabilities(basis.projector(0), meas);
  probes.pop_back();
  EXPECT_THROW(fit_pattern(sig, probes, basis), DimensionError);
  EXPECT_THROW(fit_pattern(sig, RMatrix::Zero(3, basis.size()), basis), DimensionError);
}

TEST(Assemble, IndicatorGivesProjectorExactly) {
  const ProbeBasis basis = small_lattice_basis();
  RVector e = RVector::Zero(basis.size());
  e(5) = 1.0;
  const Assembly a = assemble(e, basis);
  EXPECT_NEAR((a.state.matrix() - basis.projector(5).matrix()).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR(a.trace, 1.0, 1e-14);
}

TEST(Assemble, UniformMixtureIsMixed) {
  const ProbeBasis basis = small_lattice_basis(6, 0.15);
  const Assembly a = assemble(uniform(basis.size()), basis);
  EXPECT_NEAR(a.state.matrix().trace().real(), 1.0, 1e-12);
  EXPECT_GE(a.min_eigenvalue, -1e-12);
  EXPECT_LT(purity(a.state), 1.0);
  // Oracle: explicit sum of projectors.
  CMatrix sum = CMatrix::Zero(12, 12);
  for (int xi = 0; xi < basis.size(); ++xi) sum += basis.projector(xi).matrix() / basis.size();
  EXPECT_NEAR((sum - a.state.matrix()).cwiseAbs().maxCoeff(), 0.0, 1e-13);
}

TEST(Assemble, ClipsNegativeDirectionsAndReportsThem) {
  const HilbertSpec s = HilbertSpec::single(2);
  CMatrix kets(2, 2);
  kets.col(0) << 1.0, 0.0;
  kets.col(1) << 0.0, 1.0;
  const ProbeBasis basis = ProbeBasis::from_kets(s, kets);
  RVector x(2);
  x << 1.25, -0.25;
  const Assembly a = assemble(x, basis);
  EXPECT_NEAR(a.min_eigenvalue, -0.25, 1e-15);
  EXPECT_NEAR(a.state.matrix()(0, 0).real(), 1.0, 1e-15);
  EXPECT_THROW(assemble(RVector::Ones(3), basis), DimensionError);
}

TEST(FitCsv, HeaderAndRows) {
  FitResult fit;
  fit.coefficients = RVector::Zero(2);
  fit.coefficients(1) = 1.0;
  fit.iterations = 7;
  fit.converged = true;
  std::ostringstream out;
  write_fit_csv(out, fit);
  const std::string text = out.str();
  EXPECT_NE(text.find("# objective=0\n"), std::string::npos);
  EXPECT_NE(text.find("# iterations=7\n"), std::string::npos);
  EXPECT_NE(text.find("# converged=true\n"), std::string::npos);
  EXPECT_NE(text.find("# constraint_violation=0\n"), std::string::npos);
  EXPECT_NE(text.find("xi,x\n0,0\n1,1\n"), std::string::npos);
}

}  // namespace
}  // namespace dptomo
