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

#include "dptomo/probe_basis.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "csv.hpp"

namespace dptomo {

GridSpec GridSpec::square(int n, double d) {
  GridSpec g;
  g.kind = Kind::kSquare;
  g.nodes = n;
  g.pitch = d;
  return g;
}

GridSpec GridSpec::helical(int n, double dr, double dphi) {
  GridSpec g;
  g.kind = Kind::kHelical;
  g.nodes = n;
  g.radial_step = dr;
  g.angular_step = dphi;
  return g;
}

void GridSpec::validate() const {
  if (nodes < 1) throw InvalidArgument("grid needs at least one node");
  if (kind == Kind::kSquare && !(pitch > 0.0 && std::isfinite(pitch))) {
    throw InvalidArgument("square lattice pitch must be positive");
  }
  if (kind == Kind::kHelical) {
    if (!(radial_step > 0.0 && std::isfinite(radial_step))) {
      throw InvalidArgument("helical radial step must be positive");
    }
    if (!std::isfinite(angular_step)) throw InvalidArgument("helical angular step must be finite");
  }
}

std::vector<CoherentAmplitude> square_lattice(int n, double d) {
  GridSpec::square(n, d).validate();
  const double center = 0.5 * (n - 1);
  std::vector<CoherentAmplitude> out;
  out.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      out.emplace_back(d * (j - center), d * (k - center));
    }
  }
  return out;
}

std::vector<CoherentAmplitude> helical_grid(int n, double dr, double dphi) {
  GridSpec::helical(n, dr, dphi).validate();
  std::vector<CoherentAmplitude> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    out.emplace_back(std::polar(k * dr, k * dphi));
  }
  return out;
}

std::vector<CoherentAmplitude> make_grid(const GridSpec& grid) {
  return grid.kind == GridSpec::Kind::kSquare
             ? square_lattice(grid.nodes, grid.pitch)
             : helical_grid(grid.nodes, grid.radial_step, grid.angular_step);
}

namespace {

CMatrix coherent_columns(const std::vector<CoherentAmplitude>& grid, int truncation) {
  CMatrix kets(truncation, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    kets.col(static_cast<Eigen::Index>(i)) = coherent_vector(grid[i], truncation).vector();
  }
  return kets;
}

RMatrix overlap_squared(const CMatrix& kets) {
  return (kets.adjoint() * kets).cwiseAbs2();
}

}  // namespace

ProbeBasis ProbeBasis::single_mode(const std::vector<CoherentAmplitude>& grid, int truncation) {
  if (grid.empty()) throw InvalidArgument("probe grid is empty");
  ProbeBasis basis(HilbertSpec::single(truncation), coherent_columns(grid, truncation));
  basis.amplitudes_.reserve(grid.size());
  for (const auto& a : grid) basis.amplitudes_.push_back({a});
  return basis;
}

ProbeBasis ProbeBasis::tensor_basis(const std::vector<CoherentAmplitude>& grid,
                                    const HilbertSpec& space) {
  if (space.modes != 2) throw DimensionError("tensor_basis needs a two-mode space");
  if (grid.empty()) throw InvalidArgument("probe grid is empty");
  const int d = space.truncation;
  const CMatrix factor = coherent_columns(grid, d);
  const auto n = factor.cols();
  CMatrix kets(space.dim(), n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      auto col = kets.col(i * n + j);
      for (int n1 = 0; n1 < d; ++n1) col.segment(n1 * d, d) = factor(n1, i) * factor.col(j);
    }
  }
  ProbeBasis basis(space, std::move(kets));
  basis.amplitudes_.reserve(static_cast<std::size_t>(n * n));
  for (const auto& a : grid) {
    for (const auto& b : grid) basis.amplitudes_.push_back({a, b});
  }
  basis.mode_factor_ = factor;
  return basis;
}

ProbeBasis ProbeBasis::from_grid(const GridSpec& grid, const HilbertSpec& space) {
  const auto amps = make_grid(grid);
  return space.modes == 1 ? single_mode(amps, space.truncation) : tensor_basis(amps, space);
}

ProbeBasis ProbeBasis::from_kets(const HilbertSpec& space, CMatrix kets) {
  if (kets.rows() != space.dim()) {
    throw DimensionError("ket length does not match the Hilbert space dimension");
  }
  if (kets.cols() == 0) throw InvalidArgument("probe set is empty");
  for (Eigen::Index i = 0; i < kets.cols(); ++i) {
    if (std::abs(kets.col(i).norm() - 1.0) > kNormTol) {
      throw InvalidState("probe ket " + std::to_string(i) + " is not normalized");
    }
  }
  return ProbeBasis(space, std::move(kets));
}

DensityMatrix ProbeBasis::projector(int xi) const {
  return DensityMatrix::from_pure(PureState(space_, kets_.col(xi)));
}

RMatrix ProbeBasis::gram() const {
  if (mode_factor_) {
    const RMatrix g1 = overlap_squared(*mode_factor_);
    const auto n = g1.rows();
    RMatrix g(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) g.block(i * n, k * n, n, n) = g1(i, k) * g1;
    }
    return g;
  }
  return overlap_squared(kets_);
}

void write_grid_csv(std::ostream& out, const ProbeBasis& basis) {
  out << "xi,mode,re,im\n";
  const auto& amps = basis.amplitudes();
  for (std::size_t xi = 0; xi < amps.size(); ++xi) {
    for (std::size_t mode = 0; mode < amps[xi].size(); ++mode) {
      out << xi << ',' << mode << ',' << csv::format_double(amps[xi][mode].re()) << ','
          << csv::format_double(amps[xi][mode].im()) << '\n';
    }
  }
}

}  // namespace dptomo
