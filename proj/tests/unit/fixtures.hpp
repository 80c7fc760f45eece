// Copyright 2026 The qtomo Authors
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


// Shared fixtures for the unit tests.

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qtomo/qtomo.hpp"

namespace qtomo::testing {

inline CMatrix random_hermitian(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = Complex(g(rng), g(rng));
  return hermitian_part(m);
}

/// Ginibre-style random state; `rank` columns.
inline DensityMatrix random_state(Eigen::Index d, std::mt19937_64& rng, Eigen::Index rank = -1) {
  std::normal_distribution<double> g;
  const Eigen::Index k = rank < 0 ? d : rank;
  CMatrix a(d, k);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < k; ++c) a(r, c) = Complex(g(rng), g(rng));
  const CMatrix m = a * a.adjoint();
  return DensityMatrix::from_numerical(m / m.trace().real());
}

inline RMatrix random_stochastic(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  RMatrix q(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) q(r, c) = u(rng);
    q.row(r) /= q.row(r).sum();
  }
  return q;
}

inline Povm computational_basis(Eigen::Index d) {
  std::vector<MeasurementOperator> ops;
  for (Eigen::Index k = 0; k < d; ++k) {
    CMatrix p = CMatrix::Zero(d, d);
    p(k, k) = 1.0;
    ops.emplace_back(p);
  }
  return Povm(std::move(ops));
}

/// Qubit measured in the z, y and x bases: U in {1, U(pi/2,0), U(pi/2,pi/2)},
/// rho0 = |0><0|. Informationally complete.
inline MeasurementModel qubit_pauli_model() {
  constexpr double pi = std::numbers::pi;
  return MeasurementModel(DensityMatrix::pure(CVector::Unit(2, 0)),
                          {UnitaryOp::identity(2), rotation_gate(pi / 2, 0, 1), rotation_gate(pi / 2, pi / 2, 1)},
                          computational_basis(2));
}

/// Exact expected counts n * p for every experiment.
inline Histograms expected_counts(const MeasurementModel& model, const std::vector<DensityMatrix>& sigmas,
                                  const RMatrix& q, double n) {
  std::vector<CMatrix> taus{model.rho0().matrix()};
  for (const auto& s : sigmas) taus.push_back(s.matrix());
  auto probs = outcome_probabilities(model, taus, q);
  for (auto& p : probs) p *= n;
  return probs;
}

}  // namespace qtomo::testing
