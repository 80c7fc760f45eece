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

#include "fixtures.hpp"

namespace qtomo {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(TwoIonModelTest, Defaults) {
  const auto cfg = build_two_ion_model();
  ASSERT_EQ(cfg.poisson_means.size(), 3u);
  EXPECT_EQ(cfg.poisson_means[0], 2.0);
  EXPECT_EQ(cfg.poisson_means[1], 20.0);
  EXPECT_EQ(cfg.poisson_means[2], 40.0);
  EXPECT_EQ(cfg.max_count, 61);
  EXPECT_EQ(cfg.n_trials, 5000);
  EXPECT_EQ(cfg.reference_trials(), 5556);
  EXPECT_EQ(cfg.model.num_unitaries(), 4u);
  EXPECT_NEAR(trace_product(ket_projector(two_ion::phi_plus()), cfg.true_states.at(0).matrix()), 0.9925, 1e-15);
}

TEST(TwoIonModelTest, ProjectorRanks) {
  const auto pis = two_ion::bright_count_projectors();
  const int expected[] = {1, 2, 1};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(pis[k].matrix().trace().real(), expected[k], 1e-15);
  }
}

TEST(TwoIonModelTest, UnitariesMatchRotationAngles) {
  const auto us = two_ion::collective_rotations();
  EXPECT_LT(max_abs(us[1].matrix() - rotation_gate(kPi / 2, 0, 2).matrix()), 1e-15);
  EXPECT_LT(max_abs(us[2].matrix() - rotation_gate(kPi, 0, 2).matrix()), 1e-15);
  EXPECT_LT(max_abs(us[3].matrix() - rotation_gate(kPi / 2, kPi / 2, 2).matrix()), 1e-15);
}

TEST(MeasurementModelTest, RejectsBadInputs) {
  const auto rho0 = DensityMatrix::pure(two_ion::up_up());
  auto us = two_ion::collective_rotations();
  std::swap(us[0], us[1]);
  EXPECT_THROW(MeasurementModel(rho0, us, two_ion::bright_count_projectors()), InvariantError);
  // complete but not projective
  CMatrix a = CMatrix::Identity(2, 2) * 0.5;
  EXPECT_THROW(MeasurementModel(DensityMatrix::maximally_mixed(2), {UnitaryOp::identity(2)},
                                Povm({MeasurementOperator(a), MeasurementOperator(a)})),
               InvariantError);
}

TEST(TransitionMatrixTest, PoissonRows) {
  auto cfg = build_two_ion_model();
  const auto q = true_transition_matrix(cfg);
  EXPECT_EQ(q.subspaces(), 3);
  EXPECT_EQ(q.outcomes(), 61);
  EXPECT_NEAR(q(0, 0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(std::exp(-2.0), 0.13534, 1e-5);
  // independent recurrence p(b) = p(b-1) mean / b
  for (std::size_t k = 0; k < 3; ++k) {
    const double mean = cfg.poisson_means[k];
    double p = std::exp(-mean);
    double head = 0.0;
    for (int b = 0; b < 60; ++b) {
      if (b > 0) p *= mean / b;
      EXPECT_NEAR(q(static_cast<Eigen::Index>(k), b), p, 1e-14);
      head += p;
    }
    EXPECT_NEAR(q(static_cast<Eigen::Index>(k), 60), 1.0 - head, 1e-13);
    EXPECT_NEAR(q.matrix().row(static_cast<Eigen::Index>(k)).sum(), 1.0, 1e-15);
  }
  cfg.poisson_means = {0.0, 20.0, 40.0};
  const auto q0 = true_transition_matrix(cfg);
  EXPECT_EQ(q0(0, 0), 1.0);
  EXPECT_EQ(q0.matrix().row(0).tail(60).cwiseAbs().sum(), 0.0);
}

TEST(TransitionMatrixTest, Validation) {
  RMatrix bad(1, 2);
  bad << 0.7, 0.2;
  EXPECT_THROW(TransitionMatrix{bad}, InvariantError);
  bad << 1.2, -0.2;
  EXPECT_THROW(TransitionMatrix{bad}, InvariantError);
  EXPECT_NEAR(TransitionMatrix::clipped(bad)(0, 0), 1.0, 1e-15);
}

TEST(PopulationMatrixTest, TwoIonRows) {
  const auto cfg = build_two_ion_model();
  const RMatrix p = population_matrix(cfg);
  ASSERT_EQ(p.rows(), 4);
  ASSERT_EQ(p.cols(), 3);
  RMatrix expected(4, 3);
  expected << 0, 0, 1, 0.25, 0.5, 0.25, 1, 0, 0, 0.25, 0.5, 0.25;
  EXPECT_LT((p - expected).cwiseAbs().maxCoeff(), 1e-14);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-10);
  Eigen::FullPivLU<RMatrix> lu(p);
  EXPECT_EQ(lu.rank(), 3);
}

TEST(SamplingTest, DeterministicDistributionConcentrates) {
  const auto model = build_two_ion_measurement_model();
  const auto rho0 = model.rho0().matrix();
  const auto probs = outcome_probabilities(model, {rho0, rho0}, RMatrix::Identity(3, 3));
  const auto h = sample_from_probabilities(probs, {5556, 5000}, 1);
  EXPECT_EQ(h.counts[1](0, 2), 5000);
  EXPECT_EQ(h.counts[0](0, 2), 5556);
  EXPECT_EQ(h.counts[0](2, 0), 5556);
}

TEST(SamplingTest, TotalsAndDeterminism) {
  const auto cfg = build_two_ion_model();
  const auto a = sample_experiments(cfg);
  const auto b = sample_experiments(cfg);
  EXPECT_TRUE(a == b);
  ASSERT_EQ(a.states(), 2u);
  for (std::size_t j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(a.trials(j, i), cfg.trials_for_state(j));
  auto other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_FALSE(sample_experiments(other) == a);
}

TEST(SamplingTest, FrequenciesWithinFiveSigma) {
  auto cfg = build_two_ion_model();
  cfg.n_trials = 100000;
  const auto h = sample_experiments(cfg);
  // exact probabilities by direct arithmetic: Tr(U Pi_k U^dag tau) times Poisson rows
  const auto q = true_transition_matrix(cfg).matrix();
  const auto pis = two_ion::bright_count_projectors();
  const auto us = two_ion::collective_rotations();
  for (std::size_t j = 0; j < 2; ++j) {
    const CMatrix tau = cfg.tau(j).matrix();
    const double n = static_cast<double>(cfg.trials_for_state(j));
    for (std::size_t i = 0; i < 4; ++i) {
      const CMatrix u = us[i].matrix();
      for (Eigen::Index b = 0; b < 61; ++b) {
        double p = 0.0;
        for (std::size_t k = 0; k < 3; ++k) p += q(static_cast<Eigen::Index>(k), b) * (u.adjoint() * pis[k].matrix() * u * tau).trace().real();
        const double sigma = std::sqrt(n * p * (1 - p));
        EXPECT_LE(std::abs(static_cast<double>(h.counts[j](static_cast<Eigen::Index>(i), b)) - n * p), 5 * sigma + 1e-9)
            << "j=" << j << " i=" << i << " b=" << b;
      }
    }
  }
}

TEST(SamplingTest, RejectsUnnormalizedRows) {
  RMatrix p(1, 2);
  p << 0.5, 0.4;
  EXPECT_THROW(sample_from_probabilities({p}, {10}, 1), InvariantError);
}

TEST(ExperimentConfigTest, Validation) {
  auto cfg = build_two_ion_model();
  cfg.poisson_means = {2.0, 20.0};
  EXPECT_THROW(cfg.validate(), InvariantError);
  cfg.poisson_means = {2.0, 2.0, 40.0};
  EXPECT_THROW(cfg.validate(), InvariantError);
}

TEST(SeedTest, DerivationIsStableAndDistinct) {
  static_assert(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
  // reference value of the SplitMix64 finalizer
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

}  // namespace
}  // namespace qtomo
