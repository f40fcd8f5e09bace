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

#include "dptomo/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "csv.hpp"

namespace dptomo {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 stream: state advances by the golden-ratio increment and each
// output is the mixed state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

void require_same_space(const HilbertSpec& a, const HilbertSpec& b) {
  if (!(a == b)) throw DimensionError("state and measurement live on different spaces");
}

std::int64_t binomial_from_mode(std::int64_t n, double p, double u) {
  const double q = 1.0 - p;
  const auto mode = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::floor((static_cast<double>(n) + 1.0) * p)), 0, n);
  const double k = static_cast<double>(mode);
  const double nn = static_cast<double>(n);
  const double log_pmf = std::lgamma(nn + 1.0) - std::lgamma(k + 1.0) -
                         std::lgamma(nn - k + 1.0) + k * std::log(p) + (nn - k) * std::log(q);
  double acc = std::exp(log_pmf);
  if (u < acc) return mode;
  const double ratio = p / q;
  std::int64_t lo = mode;
  std::int64_t hi = mode;
  double p_lo = acc;
  double p_hi = acc;
  while (lo > 0 || hi < n) {
    if (hi < n) {
      p_hi *= static_cast<double>(n - hi) / static_cast<double>(hi + 1) * ratio;
      ++hi;
      acc += p_hi;
      if (u < acc) return hi;
    }
    if (lo > 0) {
      p_lo *= static_cast<double>(lo) / static_cast<double>(n - lo + 1) / ratio;
      --lo;
      acc += p_lo;
      if (u < acc) return lo;
    }
    if (p_hi == 0.0 && p_lo == 0.0) break;
  }
  // Only reachable through rounding in the accumulated mass.
  return mode;
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t h = mix64(master + kGolden);
  h = mix64((h ^ stream) + kGolden);
  return mix64((h ^ index) + kGolden);
}

std::int64_t binomial_draw(std::int64_t n, double p, std::uint64_t seed) {
  if (n < 0) throw InvalidArgument("binomial trial count must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("binomial probability outside [0,1]");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  SplitMix64 gen(seed);
  if (n <= kBernoulliLimit) {
    std::int64_t hits = 0;
    for (std::int64_t t = 0; t < n; ++t) hits += gen.uniform01() < p ? 1 : 0;
    return hits;
  }
  return binomial_from_mode(n, p, gen.uniform01());
}

DataPattern probabilities(const DensityMatrix& rho, const MeasurementSet& meas) {
  require_same_space(rho.space(), meas.space());
  const CMatrix& kets = meas.projectors().kets();
  const CMatrix rk = rho.matrix() * kets;
  DataPattern out;
  out.values.resize(kets.cols());
  for (Eigen::Index j = 0; j < kets.cols(); ++j) {
    const Complex v = kets.col(j).dot(rk.col(j));
    if (std::abs(v.imag()) > 1e-12) {
      throw InvalidState("measurement probability has imaginary residue");
    }
    out.values(j) = std::clamp(v.real(), 0.0, 1.0);
  }
  return out;
}

RMatrix probe_probability_matrix(const ProbeBasis& basis, const MeasurementSet& meas) {
  require_same_space(basis.space(), meas.space());
  const auto& pf = basis.mode_factor();
  const auto& mf = meas.projectors().mode_factor();
  RMatrix out;
  if (pf && mf) {
    // |<b1 b2|a1 a2>|^2 = |<b1|a1>|^2 |<b2|a2>|^2
    const RMatrix g = (mf->adjoint() * *pf).cwiseAbs2();
    out.resize(g.rows() * g.rows(), g.cols() * g.cols());
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      for (Eigen::Index i = 0; i < g.cols(); ++i) {
        out.block(j * g.rows(), i * g.cols(), g.rows(), g.cols()) = g(j, i) * g;
      }
    }
  } else {
    out = (meas.projectors().kets().adjoint() * basis.kets()).cwiseAbs2();
  }
  return out.cwiseMin(1.0);
}

DataPattern sample_pattern(const DataPattern& p, std::int64_t n_rep, std::uint64_t seed,
                           std::uint64_t stream) {
  if (p.kind != DataPattern::Kind::kProbability) {
    throw InvalidArgument("can only sample from a probability pattern");
  }
  if (n_rep < 1) throw InvalidArgument("n_rep must be >= 1 for sampling");
  DataPattern out;
  out.kind = DataPattern::Kind::kFrequency;
  out.n_rep = n_rep;
  out.seed = seed;
  out.values.resize(p.values.size());
  const double scale = 1.0 / static_cast<double>(n_rep);
  for (Eigen::Index j = 0; j < p.values.size(); ++j) {
    const auto hits = binomial_draw(n_rep, p.values(j),
                                    derive_seed(seed, stream, static_cast<std::uint64_t>(j)));
    out.values(j) = static_cast<double>(hits) * scale;
  }
  return out;
}

std::vector<DataPattern> probe_patterns(const ProbeBasis& basis, const MeasurementSet& meas,
                                        std::int64_t n_rep, std::uint64_t seed) {
  if (n_rep < 0) throw InvalidArgument("n_rep must be non-negative");
  const RMatrix probs = probe_probability_matrix(basis, meas);
  std::vector<DataPattern> out;
  out.reserve(basis.size());
  for (int xi = 0; xi < basis.size(); ++xi) {
    DataPattern exact;
    exact.values = probs.col(xi);
    out.push_back(n_rep == 0 ? exact
                             : sample_pattern(exact, n_rep, seed,
                                              static_cast<std::uint64_t>(xi) + 1));
  }
  return out;
}

DataPattern signal_pattern(const DensityMatrix& rho, const MeasurementSet& meas,
                           std::int64_t n_rep, std::uint64_t seed) {
  if (n_rep < 0) throw InvalidArgument("n_rep must be non-negative");
  DataPattern exact = probabilities(rho, meas);
  return n_rep == 0 ? exact : sample_pattern(exact, n_rep, seed, 0);
}

void write_pattern_csv(std::ostream& out, const DataPattern& p) {
  out << "# kind=" << (p.kind == DataPattern::Kind::kProbability ? "probability" : "frequency")
      << ",n_rep=" << p.n_rep << ",seed=" << p.seed << '\n';
  out << "j,value\n";
  for (Eigen::Index j = 0; j < p.values.size(); ++j) {
    out << j << ',' << csv::format_double(p.values(j)) << '\n';
  }
}

}  // namespace dptomo
