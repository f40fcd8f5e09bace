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

#ifndef DPTOMO_TYPES_HPP
#define DPTOMO_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dptomo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Numerical tolerances shared by every module.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdFloor = -1e-10;
inline constexpr double kNormTol = 1e-12;

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments whose shapes or Hilbert spaces do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix or vector that violates a physical-state invariant.
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Bad user-supplied parameter (state spec, grid, config value).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace dptomo

#endif  // DPTOMO_TYPES_HPP
