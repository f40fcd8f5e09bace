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

// Coherent-projection measurements and finite-copy data patterns.
//
// Every setting j is an independent binary experiment with "click"
// probability Tr(Pi_j rho), Pi_j = |beta_j><beta_j|. Settings do not form a
// complete POVM and are never normalized against each other.

#ifndef DPTOMO_MEASUREMENT_HPP
#define DPTOMO_MEASUREMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dptomo/probe_basis.hpp"

namespace dptomo {

/// K coherent projectors; stored as a ProbeBasis since the structure is
/// identical (rank-one projectors on coherent amplitudes).
class MeasurementSet {
 public:
  explicit MeasurementSet(ProbeBasis projectors) : projectors_(std::move(projectors)) {}

  static MeasurementSet from_grid(const GridSpec& grid, const HilbertSpec& space) {
    return MeasurementSet(ProbeBasis::from_grid(grid, space));
  }

  const HilbertSpec& space() const { return projectors_.space(); }
  int size() const { return projectors_.size(); }
  const ProbeBasis& projectors() const { return projectors_; }

 private:
  ProbeBasis projectors_;
};

/// Outcome probabilities or observed frequencies, one value per setting.
struct DataPattern {
  enum class Kind { kProbability, kFrequency };

  RVector values;
  Kind kind = Kind::kProbability;
  std::int64_t n_rep = 0;  // copies per setting; 0 for exact probabilities
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(values.size()); }
};

/// values[j] = Tr(Pi_j rho), clamped to [0, 1].
DataPattern probabilities(const DensityMatrix& rho, const MeasurementSet& meas);

/// Probabilities of every probe against every setting: P(j, xi).
RMatrix probe_probability_matrix(const ProbeBasis& basis, const MeasurementSet& meas);

/// Binomial(n_rep, p_j) / n_rep per setting. Setting j draws from the
/// substream derive_seed(seed, stream, j), so results do not depend on
/// evaluation order.
DataPattern sample_pattern(const DataPattern& p, std::int64_t n_rep, std::uint64_t seed,
                           std::uint64_t stream = 0);

/// One pattern per probe. n_rep == 0 returns exact probabilities; otherwise
/// probe xi samples from stream xi + 1 of `seed` (stream 0 is reserved for
/// the signal).
std::vector<DataPattern> probe_patterns(const ProbeBasis& basis, const MeasurementSet& meas,
                                        std::int64_t n_rep, std::uint64_t seed);

/// Signal pattern: exact for n_rep == 0, else sampled on stream 0.
DataPattern signal_pattern(const DensityMatrix& rho, const MeasurementSet& meas,
                           std::int64_t n_rep, std::uint64_t seed);

/// SplitMix64 finalizer: z = (z ^ z>>30) * 0xbf58476d1ce4e5b9,
/// z = (z ^ z>>27) * 0x94d049bb133111eb, z ^= z>>31.
std::uint64_t mix64(std::uint64_t z);

/// Substream seed for (master, stream, index):
/// mix64(mix64(mix64(master) ^ stream) ^ index) with a golden-ratio
/// increment folded in at each step.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Deterministic exact Binomial(n, p) draw from a 64-bit seed.
std::int64_t binomial_draw(std::int64_t n, double p, std::uint64_t seed);

/// n_rep at or below which binomial_draw sums Bernoulli trials; above it
/// uses inverse-CDF search outward from the mode.
inline constexpr std::int64_t kBernoulliLimit = 64;

/// `j,value` rows after a `# kind=...,n_rep=...,seed=...` header.
void write_pattern_csv(std::ostream& out, const DataPattern& p);

}  // namespace dptomo

#endif  // DPTOMO_MEASUREMENT_HPP
