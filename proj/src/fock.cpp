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

#include "dptomo/fock.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"

namespace dptomo {

CoherentAmplitude::CoherentAmplitude(double re, double im) : re_(re), im_(im) {
  if (!std::isfinite(re) || !std::isfinite(im)) {
    throw InvalidArgument("coherent amplitude must be finite");
  }
}

HilbertSpec::HilbertSpec(int m, int d) : modes(m), truncation(d) {
  if (m != 1 && m != 2) {
    throw InvalidArgument("modes must be 1 or 2, got " + std::to_string(m));
  }
  if (d < 2) {
    throw InvalidArgument("truncation must be >= 2, got " + std::to_string(d));
  }
}

PureState::PureState(HilbertSpec space, CVector vector)
    : space_(space), vector_(std::move(vector)) {
  if (vector_.size() != space_.dim()) {
    throw DimensionError("state vector length " + std::to_string(vector_.size()) +
                         " does not match dimension " + std::to_string(space_.dim()));
  }
  if (std::abs(vector_.norm() - 1.0) > kNormTol) {
    throw InvalidState("state vector is not normalized");
  }
}

RVector hermitian_eigenvalues(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

DensityMatrix::DensityMatrix(HilbertSpec space, CMatrix entries)
    : space_(space), entries_(std::move(entries)) {
  const Eigen::Index n = space_.dim();
  if (entries_.rows() != n || entries_.cols() != n) {
    throw DimensionError("density matrix is " + std::to_string(entries_.rows()) + "x" +
                         std::to_string(entries_.cols()) + ", expected dimension " +
                         std::to_string(n));
  }
  const double asym = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kHermitianTol) {
    throw InvalidState("density matrix is not Hermitian (max deviation " +
                       std::to_string(asym) + ")");
  }
  const Complex tr = entries_.trace();
  if (std::abs(tr.real() - 1.0) > kTraceTol || std::abs(tr.imag()) > kTraceTol) {
    throw InvalidState("density matrix trace is not one");
  }
  const double lo = hermitian_eigenvalues(entries_)(0);
  if (lo < kPsdFloor) {
    throw InvalidState("density matrix has negative eigenvalue " + std::to_string(lo));
  }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  const CVector& v = psi.vector();
  CMatrix m = v * v.adjoint();
  // Exact Hermitian symmetry regardless of rounding in the outer product.
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(psi.space(), std::move(m));
}

DensityMatrix DensityMatrix::physical_part(HilbertSpec space, const CMatrix& m,
                                           double* min_eigenvalue) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector& w = es.eigenvalues();
  if (min_eigenvalue != nullptr) *min_eigenvalue = w(0);
  const RVector clipped = w.cwiseMax(0.0);
  const double total = clipped.sum();
  if (!(total > 0.0)) {
    throw InvalidState("matrix has no positive spectral weight");
  }
  const CMatrix& q = es.eigenvectors();
  CMatrix out = q * (clipped / total).asDiagonal() * q.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(space, std::move(out));
}

RVector DensityMatrix::eigenvalues() const { return hermitian_eigenvalues(entries_); }

PureState coherent_vector(CoherentAmplitude alpha, int truncation) {
  if (truncation < 2) {
    throw InvalidArgument("truncation must be >= 2, got " + std::to_string(truncation));
  }
  const Complex a = alpha.value();
  CVector c(truncation);
  c(0) = std::exp(-0.5 * alpha.norm2());
  for (int n = 1; n < truncation; ++n) {
    c(n) = c(n - 1) * a / std::sqrt(static_cast<double>(n));
  }
  const double kept = c.squaredNorm();
  const double tail = 1.0 - kept;
  if (tail > kMaxTailMass) {
    std::ostringstream msg;
    msg << "truncation " << truncation << " too small for |alpha| = "
        << std::sqrt(alpha.norm2()) << " (tail mass " << tail << ")";
    throw InvalidArgument(msg.str());
  }
  c /= std::sqrt(kept);
  return PureState(HilbertSpec::single(truncation), std::move(c));
}

namespace {

double parse_real(std::string_view text, std::string_view spec) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw InvalidArgument("bad number '" + s + "' in state spec '" + std::string(spec) + "'");
  }
  return v;
}

// Accepts "P" or "p=P".
double parse_probability(std::string_view arg, std::string_view spec) {
  if (arg.substr(0, 2) == "p=") arg.remove_prefix(2);
  const double p = parse_real(arg, spec);
  if (p < 0.0 || p > 1.0) {
    throw InvalidArgument("mixing parameter outside [0,1] in state spec '" + std::string(spec) +
                          "'");
  }
  return p;
}

CoherentAmplitude parse_amplitude(std::string_view arg, std::string_view spec) {
  const auto comma = arg.find(',');
  if (comma == std::string_view::npos) return {parse_real(arg, spec), 0.0};
  return {parse_real(arg.substr(0, comma), spec), parse_real(arg.substr(comma + 1), spec)};
}

CVector basis_vector(int dim, int index) {
  CVector v = CVector::Zero(dim);
  v(index) = 1.0;
  return v;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix projector(const CVector& v) {
  CMatrix m = v * v.adjoint();
  return 0.5 * (m + m.adjoint());
}

void require_modes(const HilbertSpec& space, int modes, std::string_view spec) {
  if (space.modes != modes) {
    throw InvalidArgument("state spec '" + std::string(spec) + "' needs " +
                          std::to_string(modes) + " mode(s), space has " +
                          std::to_string(space.modes));
  }
}

DensityMatrix single_mode_state(std::string_view family, std::string_view arg,
                                std::string_view spec, const HilbertSpec& space) {
  const int d = space.truncation;
  if (family == "fock") {
    const double n = parse_real(arg, spec);
    if (n != std::floor(n) || n < 0 || n >= d) {
      throw InvalidArgument("Fock level out of range in state spec '" + std::string(spec) + "'");
    }
    return DensityMatrix(space, projector(basis_vector(d, static_cast<int>(n))));
  }
  if (family == "coherent") {
    return DensityMatrix::from_pure(coherent_vector(parse_amplitude(arg, spec), d));
  }
  if (family == "even_cat") {
    const CoherentAmplitude a = parse_amplitude(arg, spec);
    const CoherentAmplitude minus_a(-a.re(), -a.im());
    // <a|-a> = exp(-2|a|^2), so |(|a> + |-a>)|^2 = 2 (1 + exp(-2|a|^2)).
    const double norm2 = 2.0 * (1.0 + std::exp(-2.0 * a.norm2()));
    CVector v = (coherent_vector(a, d).vector() + coherent_vector(minus_a, d).vector()) /
                std::sqrt(norm2);
    v.normalize();
    return DensityMatrix::from_pure(PureState(space, std::move(v)));
  }
  if (family == "superpos01") {
    if (!arg.empty()) throw InvalidArgument("superpos01 takes no parameter");
    const CVector v = (basis_vector(d, 0) + basis_vector(d, 1)) / std::sqrt(2.0);
    return DensityMatrix(space, projector(v));
  }
  if (family == "mix01") {
    const double p = parse_probability(arg, spec);
    CMatrix m = CMatrix::Zero(d, d);
    m(0, 0) = p;
    m(1, 1) = 1.0 - p;
    return DensityMatrix(space, std::move(m));
  }
  throw InvalidArgument("unknown state family in spec '" + std::string(spec) + "'");
}

CVector bell_vector(int d, bool psi) {
  const CVector v = psi ? kron(basis_vector(d, 0), basis_vector(d, 1)) +
                              kron(basis_vector(d, 1), basis_vector(d, 0))
                        : kron(basis_vector(d, 0), basis_vector(d, 0)) +
                              kron(basis_vector(d, 1), basis_vector(d, 1));
  return v / std::sqrt(2.0);
}

DensityMatrix two_mode_state(std::string_view family, std::string_view arg,
                             std::string_view spec, const HilbertSpec& space) {
  const int d = space.truncation;
  if (family == "bell_psi" || family == "bell_phi") {
    if (!arg.empty()) throw InvalidArgument(std::string(family) + " takes no parameter");
    return DensityMatrix(space, projector(bell_vector(d, family == "bell_psi")));
  }
  if (family == "bell_mix") {
    const double p = parse_probability(arg, spec);
    CMatrix m = (1.0 - p) * projector(bell_vector(d, true)) + p * projector(bell_vector(d, false));
    return DensityMatrix(space, std::move(m));
  }
  if (family == "entangled_cat") {
    const CoherentAmplitude a = parse_amplitude(arg, spec);
    const CVector plus = coherent_vector(a, d).vector();
    const CVector minus = coherent_vector(CoherentAmplitude(-a.re(), -a.im()), d).vector();
    // |<a,-a|-a,a>| = exp(-4|a|^2).
    const double norm2 = 2.0 * (1.0 + std::exp(-4.0 * a.norm2()));
    CVector v = (kron(plus, minus) + kron(minus, plus)) / std::sqrt(norm2);
    v.normalize();
    return DensityMatrix(space, projector(v));
  }
  if (family == "product") {
    const auto bar = arg.find('|');
    if (bar == std::string_view::npos) {
      throw InvalidArgument("product spec needs '<spec>|<spec>', got '" + std::string(spec) + "'");
    }
    const HilbertSpec one = HilbertSpec::single(d);
    return tensor(named_state(arg.substr(0, bar), one), named_state(arg.substr(bar + 1), one));
  }
  throw InvalidArgument("unknown state family in spec '" + std::string(spec) + "'");
}

}  // namespace

DensityMatrix named_state(std::string_view spec, const HilbertSpec& space) {
  const auto colon = spec.find(':');
  const std::string_view family = spec.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  static constexpr std::string_view kTwoMode[] = {"bell_psi", "bell_phi", "bell_mix",
                                                  "entangled_cat", "product"};
  for (auto name : kTwoMode) {
    if (family == name) {
      require_modes(space, 2, spec);
      return two_mode_state(family, arg, spec, space);
    }
  }
  require_modes(space, 1, spec);
  return single_mode_state(family, arg, spec, space);
}

PureState tensor(const PureState& a, const PureState& b) {
  if (a.space().modes != 1 || b.space().modes != 1 ||
      a.space().truncation != b.space().truncation) {
    throw DimensionError("tensor needs two single-mode states of equal truncation");
  }
  CVector v = kron(a.vector(), b.vector());
  v.normalize();
  return PureState(HilbertSpec::two_mode(a.space().truncation), std::move(v));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.space().modes != 1 || b.space().modes != 1 ||
      a.space().truncation != b.space().truncation) {
    throw DimensionError("tensor needs two single-mode states of equal truncation");
  }
  CMatrix m = kron(a.matrix(), b.matrix());
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(HilbertSpec::two_mode(a.space().truncation), std::move(m));
}

CMatrix partial_transpose(const CMatrix& m, int d) {
  if (m.rows() != d * d || m.cols() != d * d) {
    throw DimensionError("partial transpose needs a two-mode matrix of dimension " +
                         std::to_string(d * d));
  }
  CMatrix out(m.rows(), m.cols());
  for (int n1 = 0; n1 < d; ++n1) {
    for (int n2 = 0; n2 < d; ++n2) {
      for (int m1 = 0; m1 < d; ++m1) {
        for (int m2 = 0; m2 < d; ++m2) {
          out(n1 * d + n2, m1 * d + m2) = m(n1 * d + m2, m1 * d + n2);
        }
      }
    }
  }
  return out;
}

CMatrix partial_transpose(const DensityMatrix& rho) {
  if (rho.space().modes != 2) {
    throw DimensionError("partial transpose needs a two-mode state");
  }
  return partial_transpose(rho.matrix(), rho.space().truncation);
}

void write_density_csv(std::ostream& out, const DensityMatrix& rho) {
  const auto& m = rho.matrix();
  out << m.rows() << ',' << rho.space().modes << ',' << rho.space().truncation << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << csv::format_double(m(i, j).real()) << ',' << csv::format_double(m(i, j).imag());
    }
    out << '\n';
  }
}

DensityMatrix read_density_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty density-matrix CSV");
  const auto head = csv::split(line);
  if (head.size() != 3) throw InvalidArgument("density-matrix CSV header needs dim,modes,truncation");
  const int dim = static_cast<int>(csv::parse_double(head[0]));
  const HilbertSpec space(static_cast<int>(csv::parse_double(head[1])),
                          static_cast<int>(csv::parse_double(head[2])));
  if (dim != space.dim()) throw DimensionError("density-matrix CSV header is inconsistent");
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (!std::getline(in, line)) throw InvalidArgument("density-matrix CSV is truncated");
    const auto cells = csv::split(line);
    if (static_cast<int>(cells.size()) != 2 * dim) {
      throw InvalidArgument("density-matrix CSV row " + std::to_string(i) + " has " +
                            std::to_string(cells.size()) + " fields");
    }
    for (int j = 0; j < dim; ++j) {
      m(i, j) = Complex(csv::parse_double(cells[2 * j]), csv::parse_double(cells[2 * j + 1]));
    }
  }
  return DensityMatrix(space, std::move(m));
}

}  // namespace dptomo
