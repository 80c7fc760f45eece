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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"

namespace qtomo {
namespace {

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector3d v(g(rng), g(rng), g(rng));
  return v.normalized();
}

CMatrix bloch_operator(const Eigen::Vector3d& n) { return n(0) * pauli_x() + n(1) * pauli_y() + n(2) * pauli_z(); }

std::size_t gram_rank(const std::vector<CMatrix>& ops) {
  const auto n = static_cast<Eigen::Index>(ops.size());
  RMatrix g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) g(a, b) = trace_product(ops[static_cast<std::size_t>(a)], ops[static_cast<std::size_t>(b)]);
  const RVector ev = Eigen::SelfAdjointEigenSolver<RMatrix>(g).eigenvalues();
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (ev(k) > 1e-9 * ev.maxCoeff()) ++r;
  return r;
}

TEST(ConstraintBasisTest, RetainedCounts) {
  const auto ic = testing::qubit_pauli_model();
  EXPECT_EQ(build_constraint_basis(TransitionMatrix(RMatrix::Identity(2, 2)), ic).retained_count(), 4u);

  const MeasurementModel z_only(DensityMatrix::pure(CVector::Unit(2, 0)), {UnitaryOp::identity(2)},
                                testing::computational_basis(2));
  EXPECT_EQ(build_constraint_basis(TransitionMatrix(RMatrix::Identity(2, 2)), z_only).retained_count(), 2u);

  const auto cfg = build_two_ion_model();
  const auto basis = build_constraint_basis(true_transition_matrix(cfg), cfg.model);
  std::vector<CMatrix> pis;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) pis.push_back(cfg.model.engineered_projector(i, k));
  EXPECT_EQ(basis.retained_count(), gram_rank(pis));
  EXPECT_EQ(basis.retained_count(), 7u);
  EXPECT_LT(basis.retained_count(), 16u);
  // rows orthonormal under the trace inner product
  for (std::size_t a = 0; a < basis.rows.size(); ++a)
    for (std::size_t b = 0; b < basis.rows.size(); ++b)
      EXPECT_NEAR(trace_product(basis.rows[a], basis.rows[b]), a == b ? 1.0 : 0.0, 1e-12);
}

TEST(BoundsTest, QubitExamples) {
  const Observable x(pauli_x(), "x");
  const std::vector<CMatrix> z_constraint{ket_projector(CVector::Unit(2, 0))};
  const auto pure = solve_bounds(x, DensityMatrix::pure(CVector::Unit(2, 0)), z_constraint);
  EXPECT_TRUE(pure.valid);
  EXPECT_NEAR(pure.lower, 0.0, 1e-6);
  EXPECT_NEAR(pure.upper, 0.0, 1e-6);
  EXPECT_TRUE(pure.identifiable);

  const auto mixed = solve_bounds(x, DensityMatrix::maximally_mixed(2), z_constraint);
  EXPECT_TRUE(mixed.valid);
  EXPECT_NEAR(mixed.lower, -1.0, 1e-6);
  EXPECT_NEAR(mixed.upper, 1.0, 1e-6);
  EXPECT_FALSE(mixed.identifiable);
}

// plane n.r = a cut through the Bloch ball, objective m.r
TEST(BoundsTest, BlochScanOracle) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const auto sigma = testing::random_state(2, rng);
    const Eigen::Vector3d n = random_unit(rng), m = random_unit(rng);
    const CMatrix s = sigma.matrix();
    const Eigen::Vector3d r(trace_product(pauli_x(), s), trace_product(pauli_y(), s), trace_product(pauli_z(), s));
    const double a = n.dot(r);
    const double along = m.dot(n);
    const double across = (m - along * n).norm();
    const double half = across * std::sqrt(std::max(0.0, 1.0 - a * a));
    const auto b = solve_bounds(Observable(bloch_operator(m), "m"), sigma,
                                std::vector<CMatrix>{0.5 * (CMatrix::Identity(2, 2) + bloch_operator(n))});
    ASSERT_TRUE(b.valid);
    EXPECT_NEAR(b.lower, along * a - half, 1e-6);
    EXPECT_NEAR(b.upper, along * a + half, 1e-6);
  }
}

TEST(BoundsTest, ReducedBasisMatchesFullConstraintSet) {
  std::mt19937_64 rng(19);
  const auto cfg = build_two_ion_model();
  for (int rep = 0; rep < 5; ++rep) {
    const TransitionMatrix q(testing::random_stochastic(3, 8, rng));
    const auto sigma = testing::random_state(4, rng);
    const Observable o(testing::random_hermitian(4, rng), "random");
    const auto reduced = solve_bounds(o, sigma, build_constraint_basis(q, cfg.model));
    const auto full = solve_bounds(o, sigma, cfg.model.engineered_povm(q.matrix()));
    ASSERT_TRUE(reduced.valid && full.valid);
    EXPECT_NEAR(reduced.lower, full.lower, 1e-6);
    EXPECT_NEAR(reduced.upper, full.upper, 1e-6);
  }
  // qubit measured along z and x only
  const MeasurementModel zx(DensityMatrix::pure(CVector::Unit(2, 0)),
                            {UnitaryOp::identity(2), rotation_gate(std::numbers::pi / 2, 0, 1)},
                            testing::computational_basis(2));
  for (int rep = 0; rep < 5; ++rep) {
    const TransitionMatrix q(testing::random_stochastic(2, 3, rng));
    const auto sigma = testing::random_state(2, rng);
    const Observable o(testing::random_hermitian(2, rng), "random");
    const auto reduced = solve_bounds(o, sigma, build_constraint_basis(q, zx));
    const auto full = solve_bounds(o, sigma, zx.engineered_povm(q.matrix()));
    EXPECT_NEAR(reduced.lower, full.lower, 1e-6);
    EXPECT_NEAR(reduced.upper, full.upper, 1e-6);
  }
}

TEST(BoundsTest, SandwichAndFeasibility) {
  std::mt19937_64 rng(23);
  const auto cfg = build_two_ion_model();
  const auto basis = build_constraint_basis(true_transition_matrix(cfg), cfg.model);
  for (int rep = 0; rep < 10; ++rep) {
    // includes rank-deficient states, which need the face restriction
    const auto sigma = testing::random_state(4, rng, 1 + rep % 4);
    const Observable o(testing::random_hermitian(4, rng), "random");
    const auto b = solve_bounds(o, sigma, basis);
    ASSERT_TRUE(b.valid) << rep;
    const double v = trace_product(o.matrix(), sigma.matrix());
    EXPECT_LE(b.lower, v + 1e-6);
    EXPECT_GE(b.upper, v - 1e-6);
    EXPECT_LE(b.diagnostics.max_constraint_residual, 1e-6);
  }
}

TEST(BoundsTest, IdentifiableObservables) {
  std::mt19937_64 rng(29);
  const auto cfg = build_two_ion_model();
  const auto basis = build_constraint_basis(true_transition_matrix(cfg), cfg.model);
  const auto sigma = testing::random_state(4, rng);

  const auto one = solve_bounds(Observable(CMatrix::Identity(4, 4), "one"), sigma, basis);
  EXPECT_NEAR(one.lower, 1.0, 1e-9);
  EXPECT_NEAR(one.upper, 1.0, 1e-9);
  EXPECT_TRUE(one.identifiable);

  const auto bell = bell_observable();
  EXPECT_LT(span_residual(bell, basis), 1e-10);
  const auto b = solve_bounds(bell, sigma, basis);
  const double v = trace_product(bell.matrix(), sigma.matrix());
  EXPECT_TRUE(b.identifiable);
  EXPECT_NEAR(b.lower, v, 1e-6);
  EXPECT_NEAR(b.upper, v, 1e-6);
  EXPECT_NEAR(linear_combination_value(bell, sigma, basis), v, 1e-12);

  const auto second = second_ion_bright_observable();
  EXPECT_GT(span_residual(second, basis), 1e-3);
  const auto s = solve_bounds(second, sigma, basis);
  EXPECT_FALSE(s.identifiable);
}

TEST(BoundsTest, DimensionMismatch) {
  const auto cfg = build_two_ion_model();
  const auto basis = build_constraint_basis(true_transition_matrix(cfg), cfg.model);
  EXPECT_THROW(solve_bounds(Observable(pauli_x(), "x"), DensityMatrix::maximally_mixed(4), basis), DimensionError);
}

}  // namespace
}  // namespace qtomo
