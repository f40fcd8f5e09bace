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

#include "dptomo/convex_fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "csv.hpp"

namespace dptomo {
namespace {

// ---------------------------------------------------------------------------
// Synthesis operator S x = sum_xi x_xi |v_xi><v_xi| and its adjoint
// (S^T Y)_xi = Re <v_xi| Y |v_xi>.
// ---------------------------------------------------------------------------
class Synthesis {
 public:
  explicit Synthesis(const ProbeBasis& basis) : kets_(basis.kets()) {
    if (const auto& f = basis.mode_factor()) {
      // Q(i, n*D + m) = a_i[n] conj(a_i[m]); one row per single-mode factor.
      const CMatrix& a = *f;
      d_ = a.rows();
      n_ = a.cols();
      q_.resize(n_, d_ * d_);
      for (Eigen::Index i = 0; i < n_; ++i) {
        for (Eigen::Index r = 0; r < d_; ++r) {
          for (Eigen::Index c = 0; c < d_; ++c) q_(i, r * d_ + c) = a(r, i) * std::conj(a(c, i));
        }
      }
      q_adj_ = q_.adjoint();
      q_conj_ = q_.conjugate();
      q_re_ = q_.real();
      q_im_ = q_.imag();
      g1_ = (a.adjoint() * a).cwiseAbs2();
      kron_ = true;
    } else {
      g_ = basis.gram();
    }
  }

  CMatrix apply(const RVector& x) const {
    if (!kron_) {
      CMatrix out = kets_ * x.cast<Complex>().asDiagonal() * kets_.adjoint();
      return 0.5 * (out + out.adjoint());
    }
    // R = Q^T X Q with X(i, j) = x[i n + j]; then un-shuffle
    // out[(n1,n2),(m1,m2)] = R[(n1,m1),(n2,m2)].
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        xm(x.data(), n_, n_);
    CMatrix xq(n_, d_ * d_);
    xq.real() = xm * q_re_;
    xq.imag() = xm * q_im_;
    const CMatrix r = q_.transpose() * xq;
    CMatrix out(d_ * d_, d_ * d_);
    shuffle(r, out);
    return 0.5 * (out + out.adjoint());
  }

  RVector adjoint(const CMatrix& y) const {
    if (!kron_) {
      const CMatrix yv = y * kets_;
      return kets_.conjugate().cwiseProduct(yv).colwise().sum().real().transpose();
    }
    CMatrix ry(d_ * d_, d_ * d_);
    shuffle(y, ry);
    const CMatrix res = q_conj_ * ry * q_adj_;
    RVector out(n_ * n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      for (Eigen::Index j = 0; j < n_; ++j) out(i * n_ + j) = res(i, j).real();
    }
    return out;
  }

  /// G x with G(xi, eta) = Tr(sigma_xi sigma_eta) = (S^T S)(xi, eta).
  RVector gram_apply(const RVector& x) const {
    if (!kron_) return g_ * x;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> xm(x.data(), n_, n_);
    const RowMat y = g1_ * xm * g1_;
    return Eigen::Map<const RVector>(y.data(), n_ * n_);
  }

  bool kronecker() const { return kron_; }
  const RMatrix& factor_gram() const { return g1_; }
  const RMatrix& gram() const { return g_; }

 private:
  // The index shuffle is its own inverse: [(a,b),(c,d)] <-> [(a,c),(b,d)].
  void shuffle(const CMatrix& in, CMatrix& out) const {
    for (Eigen::Index n1 = 0; n1 < d_; ++n1) {
      for (Eigen::Index n2 = 0; n2 < d_; ++n2) {
        for (Eigen::Index m1 = 0; m1 < d_; ++m1) {
          for (Eigen::Index m2 = 0; m2 < d_; ++m2) {
            out(n1 * d_ + n2, m1 * d_ + m2) = in(n1 * d_ + m1, n2 * d_ + m2);
          }
        }
      }
    }
  }

  const CMatrix& kets_;
  bool kron_ = false;
  Eigen::Index d_ = 0;
  Eigen::Index n_ = 0;
  CMatrix q_, q_adj_, q_conj_;
  RMatrix q_re_, q_im_;
  RMatrix g1_;  // single-mode Gram (Kronecker case)
  RMatrix g_;   // full Gram (generic case)
};

// ---------------------------------------------------------------------------
// x-update solvers for (H + rho (G + gamma^2 I) + tikhonov I) x = b.
// ---------------------------------------------------------------------------
class XSolver {
 public:
  virtual ~XSolver() = default;
  virtual void set_penalty(double rho) = 0;
  virtual RVector solve(const RVector& b) const = 0;
};

// General case: dense Cholesky, refactored whenever the penalty moves.
class CholeskySolver final : public XSolver {
 public:
  CholeskySolver(RMatrix h, RMatrix g, double gamma2, double tikhonov)
      : h_(std::move(h)), g_(std::move(g)), gamma2_(gamma2), tikhonov_(tikhonov) {}

  void set_penalty(double rho) override {
    if (rho == rho_) return;
    rho_ = rho;
    RMatrix a = h_ + rho * g_;
    a.diagonal().array() += rho * gamma2_ + tikhonov_;
    llt_.compute(a);
    if (llt_.info() != Eigen::Success) {
      throw Error("x-update matrix is numerically singular beyond regularization");
    }
  }

  RVector solve(const RVector& b) const override { return llt_.solve(b); }

 private:
  RMatrix h_, g_;
  double gamma2_, tikhonov_;
  double rho_ = std::numeric_limits<double>::quiet_NaN();
  Eigen::LLT<RMatrix> llt_;
};

// H = G with G = kron(G1, G1): the system diagonalizes in kron(Q1, Q1).
class KroneckerSpectralSolver final : public XSolver {
 public:
  KroneckerSpectralSolver(const RMatrix& g1, double gamma2, double tikhonov)
      : gamma2_(gamma2), tikhonov_(tikhonov) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(g1);
    q_ = es.eigenvectors();
    const RVector lam = es.eigenvalues().cwiseMax(0.0);
    outer_ = lam * lam.transpose();
  }

  void set_penalty(double rho) override {
    denom_ = ((1.0 + rho) * outer_).array() + (rho * gamma2_ + tikhonov_);
  }

  RVector solve(const RVector& b) const override {
    const auto n = q_.rows();
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> bm(b.data(), n, n);
    RowMat t = q_.transpose() * bm * q_;
    t.array() /= denom_.array();
    const RowMat xm = q_ * t * q_.transpose();
    return Eigen::Map<const RVector>(xm.data(), n * n);
  }

 private:
  double gamma2_, tikhonov_;
  RMatrix q_, outer_, denom_;
};

// ---------------------------------------------------------------------------
// Projections.
// ---------------------------------------------------------------------------

// Euclidean projection of v onto {w >= 0, sum w = 1}.
RVector project_simplex(const RVector& v) {
  RVector s = v;
  std::sort(s.data(), s.data() + s.size(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    cumsum += s(k);
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (s(k) - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

// Nearest unit-trace PSD matrix in Frobenius norm.
CMatrix project_spectraplex(const CMatrix& w) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(w);
  const RVector lam = project_simplex(es.eigenvalues());
  Eigen::Index first = 0;
  while (first < lam.size() && lam(first) == 0.0) ++first;
  const auto k = lam.size() - first;
  const auto q = es.eigenvectors().rightCols(k);
  CMatrix out = q * lam.tail(k).cast<Complex>().asDiagonal() * q.adjoint();
  return 0.5 * (out + out.adjoint());
}

constexpr double kMinPenalty = 1e-6;
constexpr double kMaxPenalty = 1e6;

double min_eigenvalue(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Problem description: minimize 1/2 x^T H x - c^T x (+ constant) over the
// physical set. `objective` evaluates the reported (unhalved) objective.
// ---------------------------------------------------------------------------
struct Problem {
  RVector c;
  std::unique_ptr<XSolver> solver;
  std::function<double(const RVector&)> objective;
  RMatrix hessian;  // H explicitly; left empty when M is too large to refine
};

// Largest basis for which the face refinement below is attempted.
constexpr int kFaceRefineMaxSize = 400;

void finalize_diagnostics(FitResult& r, const Synthesis& synth, const SolverConfig& cfg) {
  const RVector& x = r.coefficients;
  r.sum_deviation = std::abs(x.sum() - 1.0);
  r.min_eigenvalue = min_eigenvalue(synth.apply(x));
  r.box_excess = std::max(0.0, x.cwiseAbs().maxCoeff() - cfg.coeff_bound);
  r.constraint_violation = std::max({r.sum_deviation, -r.min_eigenvalue, r.box_excess});
}

// The returned point: x itself when it already sits in the box (its image is
// within the primal residual of the PSD block), else the box copy z; then
// rescaled to unit sum, which keeps PSD-ness and fixes the affine constraint
// exactly.
RVector polish(const RVector& x, const RVector& z, double bound) {
  RVector p = x.cwiseAbs().maxCoeff() <= bound ? x : z;
  const double s = p.sum();
  if (s > 0.0) {
    p /= s;
    if (p.cwiseAbs().maxCoeff() > bound) p = z;
  }
  return p;
}

// First-order iterations approach a solution on the boundary of the PSD cone
// slowly. Once the iterate identifies the face (the range of the mixture),
// the remaining problem is an equality-constrained quadratic: keep the
// mixture inside that range, keep sum x = 1, minimize. This is solved
// directly for a few candidate ranks; a candidate replaces the iterate only
// if it is feasible to primal_tol and strictly improves the objective.
RVector refine_on_face(const Problem& prob, const Synthesis& synth, const CMatrix& kets,
                       const RVector& x0, const SolverConfig& cfg) {
  const auto m = x0.size();
  const auto dim = kets.rows();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(synth.apply(x0));
  const RVector& lam = es.eigenvalues();

  RVector best = x0;
  double best_obj = prob.objective(x0);
  Eigen::Index last_rank = -1;
  for (int k = 1; k <= 10; ++k) {
    const double tau = std::pow(10.0, -k);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < dim; ++i) rank += lam(i) > tau ? 1 : 0;
    if (rank == last_rank || rank == 0) continue;
    last_rank = rank;

    // Rows: real and imaginary parts of Q^H (sum x sigma) Q, then sum x.
    const auto nq = dim - rank;
    const CMatrix w = es.eigenvectors().leftCols(nq).adjoint() * kets;
    RMatrix a(nq * nq + 1, m);
    Eigen::Index row = 0;
    for (Eigen::Index p = 0; p < nq; ++p) {
      for (Eigen::Index q = p; q < nq; ++q) {
        const auto prod = w.row(p).cwiseProduct(w.row(q).conjugate());
        a.row(row++) = prod.real();
        if (q != p) a.row(row++) = prod.imag();
      }
    }
    a.row(row) = RVector::Ones(m).transpose();
    RVector b = RVector::Zero(a.rows());
    b(row) = 1.0;

    Eigen::BDCSVD<RMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const Eigen::Index r = svd.rank();
    const RVector xp = svd.solve(b);
    RVector x = xp;
    if (r < m) {
      const RMatrix n = svd.matrixV().rightCols(m - r);
      const RMatrix hn = prob.hessian * n;
      const RMatrix reduced = n.transpose() * hn;
      const RVector rhs = n.transpose() * (prob.c - prob.hessian * xp);
      x += n * reduced.completeOrthogonalDecomposition().solve(rhs);
    }
    if (!x.allFinite()) continue;
    const double viol = std::max({std::abs(x.sum() - 1.0), -min_eigenvalue(synth.apply(x)),
                                  x.cwiseAbs().maxCoeff() - cfg.coeff_bound});
    if (viol > cfg.primal_tol) continue;
    const double obj = prob.objective(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

FitResult run_admm(Problem& prob, const Synthesis& synth, const CMatrix& kets, int m,
                   const SolverConfig& cfg) {
  FitResult result;
  result.tikhonov = cfg.tikhonov;

  if (m == 1) {
    // Only x = (1) satisfies the affine constraint.
    result.coefficients = RVector::Ones(1);
    result.converged = true;
    result.objective = prob.objective(result.coefficients);
    finalize_diagnostics(result, synth, cfg);
    return result;
  }

  const double g2 = cfg.box_scaling * cfg.box_scaling;
  const double alpha = cfg.relaxation;
  double rho = cfg.admm_penalty;
  prob.solver->set_penalty(rho);

  RVector x = RVector::Constant(m, 1.0 / m);
  RVector z = x;
  RVector u = RVector::Zero(m);
  CMatrix sx = synth.apply(x);
  CMatrix zm = project_spectraplex(sx);
  CMatrix um = CMatrix::Zero(sx.rows(), sx.cols());
  // S^T Z and S^T U are carried along so each iteration needs one adjoint.
  RVector st_z = synth.adjoint(zm);
  RVector st_u = RVector::Zero(m);

  double best_merit = std::numeric_limits<double>::infinity();
  RVector best_x = x, best_z = z;
  double best_r = 0.0, best_s = 0.0;

  int it = 0;
  double r_norm = 0.0, s_norm = 0.0;
  bool converged = false;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    const RVector rhs = prob.c + rho * g2 * (z - u) + rho * (st_z - st_u);
    x = prob.solver->solve(rhs);
    sx = synth.apply(x);

    // Over-relaxed images of x in both blocks.
    const RVector xr = alpha * x + (1.0 - alpha) * z;
    const CMatrix sxr = alpha * sx + (1.0 - alpha) * zm;
    const RVector st_sxr = alpha * synth.gram_apply(x) + (1.0 - alpha) * st_z;

    const RVector z_prev = z;
    const RVector st_z_prev = st_z;
    z = (xr + u).cwiseMax(-cfg.coeff_bound).cwiseMin(cfg.coeff_bound);
    zm = project_spectraplex(sxr + um);
    st_z = synth.adjoint(zm);
    u += xr - z;
    um += sxr - zm;
    st_u += st_sxr - st_z;

    r_norm = std::sqrt(g2 * (x - z).squaredNorm() + (sx - zm).squaredNorm());
    s_norm = rho * (g2 * (z - z_prev) + (st_z - st_z_prev)).norm();

    const double merit = std::max(r_norm / cfg.primal_tol, s_norm / cfg.dual_tol);
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x;
      best_z = z;
      best_r = r_norm;
      best_s = s_norm;
    }
    if (r_norm <= cfg.primal_tol && s_norm <= cfg.dual_tol) {
      converged = true;
      break;
    }

    if (it % cfg.adapt_interval == 0) {
      double scale = 1.0;
      if (r_norm > cfg.adapt_ratio * s_norm) {
        scale = cfg.adapt_factor;
      } else if (s_norm > cfg.adapt_ratio * r_norm) {
        scale = 1.0 / cfg.adapt_factor;
      }
      if (scale != 1.0 && rho * scale >= kMinPenalty && rho * scale <= kMaxPenalty) {
        rho *= scale;
        u /= scale;  // scaled duals: y = rho u stays fixed
        um /= scale;
        prob.solver->set_penalty(rho);
      }
      st_u = synth.adjoint(um);  // drop accumulated rounding
    }
  }

  result.converged = converged;
  result.iterations = std::min(it, cfg.max_iterations);
  result.final_penalty = rho;
  if (converged) {
    result.coefficients = polish(x, z, cfg.coeff_bound);
    result.primal_residual = r_norm;
    result.dual_residual = s_norm;
  } else {
    result.coefficients = polish(best_x, best_z, cfg.coeff_bound);
    result.primal_residual = best_r;
    result.dual_residual = best_s;
  }
  if (prob.hessian.rows() == m) {
    result.coefficients = refine_on_face(prob, synth, kets, result.coefficients, cfg);
  }
  result.objective = std::max(0.0, prob.objective(result.coefficients));
  finalize_diagnostics(result, synth, cfg);
  return result;
}

void require_same_space(const HilbertSpec& a, const HilbertSpec& b) {
  if (!(a == b)) throw DimensionError("target and probe basis live on different spaces");
}

}  // namespace

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("solver.") + name + " must be a positive finite number");
    }
  };
  positive(coeff_bound, "coeff_bound");
  positive(primal_tol, "primal_tol");
  positive(dual_tol, "dual_tol");
  positive(admm_penalty, "admm_penalty");
  positive(box_scaling, "box_scaling");
  if (max_iterations < 1) throw InvalidArgument("solver.max_iterations must be >= 1");
  if (!(adapt_factor > 1.0)) throw InvalidArgument("solver.adapt_factor must be > 1");
  if (!(adapt_ratio > 1.0)) throw InvalidArgument("solver.adapt_ratio must be > 1");
  if (adapt_interval < 1) throw InvalidArgument("solver.adapt_interval must be >= 1");
  if (!(relaxation > 0.0 && relaxation < 2.0)) {
    throw InvalidArgument("solver.relaxation must lie in (0, 2)");
  }
  if (!(tikhonov >= 0.0) || !std::isfinite(tikhonov)) {
    throw InvalidArgument("solver.tikhonov must be a non-negative finite number");
  }
}

FitResult fit_state(const DensityMatrix& target, const ProbeBasis& basis,
                    const SolverConfig& cfg) {
  cfg.validate();
  require_same_space(target.space(), basis.space());
  if (basis.size() < 1) throw InvalidArgument("probe basis is empty");

  const Synthesis synth(basis);
  const double g2 = cfg.box_scaling * cfg.box_scaling;
  Problem prob;
  prob.c = synth.adjoint(target.matrix());
  if (synth.kronecker()) {
    prob.solver = std::make_unique<KroneckerSpectralSolver>(synth.factor_gram(), g2, cfg.tikhonov);
  } else {
    prob.solver = std::make_unique<CholeskySolver>(synth.gram(), synth.gram(), g2, cfg.tikhonov);
    if (basis.size() <= kFaceRefineMaxSize) prob.hessian = synth.gram();
  }
  const CMatrix t = target.matrix();
  prob.objective = [&synth, t](const RVector& x) { return (t - synth.apply(x)).squaredNorm(); };
  return run_admm(prob, synth, basis.kets(), basis.size(), cfg);
}

FitResult fit_pattern(const DataPattern& signal, const RMatrix& probe_matrix,
                      const ProbeBasis& basis, const SolverConfig& cfg) {
  cfg.validate();
  if (probe_matrix.cols() != basis.size()) {
    throw DimensionError("expected one probe pattern per basis element");
  }
  if (probe_matrix.rows() != signal.values.size()) {
    throw DimensionError("signal and probe patterns have different numbers of settings");
  }
  if (basis.size() < 1) throw InvalidArgument("probe basis is empty");

  const Synthesis synth(basis);
  const double g2 = cfg.box_scaling * cfg.box_scaling;
  Problem prob;
  prob.c = probe_matrix.transpose() * signal.values;
  RMatrix h = probe_matrix.transpose() * probe_matrix;
  if (basis.size() <= kFaceRefineMaxSize) prob.hessian = h;
  prob.solver = std::make_unique<CholeskySolver>(std::move(h), basis.gram(), g2, cfg.tikhonov);
  const RVector f = signal.values;
  prob.objective = [&probe_matrix, f](const RVector& x) {
    return (f - probe_matrix * x).squaredNorm();
  };
  return run_admm(prob, synth, basis.kets(), basis.size(), cfg);
}

FitResult fit_pattern(const DataPattern& signal, const std::vector<DataPattern>& probe_patterns,
                      const ProbeBasis& basis, const SolverConfig& cfg) {
  if (static_cast<int>(probe_patterns.size()) != basis.size()) {
    throw DimensionError("expected " + std::to_string(basis.size()) + " probe patterns, got " +
                         std::to_string(probe_patterns.size()));
  }
  RMatrix fm(signal.values.size(), basis.size());
  for (int xi = 0; xi < basis.size(); ++xi) {
    if (probe_patterns[xi].values.size() != signal.values.size()) {
      throw DimensionError("probe pattern " + std::to_string(xi) +
                           " has a different number of settings than the signal");
    }
    fm.col(xi) = probe_patterns[xi].values;
  }
  return fit_pattern(signal, fm, basis, cfg);
}

CMatrix mixture(const RVector& x, const ProbeBasis& basis) {
  if (x.size() != basis.size()) {
    throw DimensionError("coefficient vector length does not match the basis size");
  }
  return Synthesis(basis).apply(x);
}

Assembly assemble(const RVector& x, const ProbeBasis& basis) {
  const CMatrix m = mixture(x, basis);
  double min_eig = 0.0;
  const double trace = m.trace().real();
  DensityMatrix state = DensityMatrix::physical_part(basis.space(), m, &min_eig);
  return Assembly{std::move(state), min_eig, trace};
}

void write_fit_csv(std::ostream& out, const FitResult& fit) {
  out << "# objective=" << csv::format_double(fit.objective) << '\n'
      << "# iterations=" << fit.iterations << '\n'
      << "# converged=" << (fit.converged ? "true" : "false") << '\n'
      << "# constraint_violation=" << csv::format_double(fit.constraint_violation) << '\n'
      << "# min_eigenvalue=" << csv::format_double(fit.min_eigenvalue) << '\n'
      << "# primal_residual=" << csv::format_double(fit.primal_residual) << '\n'
      << "# dual_residual=" << csv::format_double(fit.dual_residual) << '\n'
      << "# tikhonov=" << csv::format_double(fit.tikhonov) << '\n';
  out << "xi,x\n";
  for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i) {
    out << i << ',' << csv::format_double(fit.coefficients(i)) << '\n';
  }
}

}  // namespace dptomo
