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
#include <random>

#include "fixtures.hpp"

namespace qtomo {
namespace {

double mi_of(const RMatrix& p) { return mutual_information(JointDistribution(p)); }

TEST(MutualInformationTest, Examples) {
  EXPECT_NEAR(mi_of(RMatrix::Identity(3, 3) / 3.0), std::log2(3.0), 1e-12);
  RMatrix product(2, 3);
  product << 0.1, 0.2, 0.2, 0.1, 0.2, 0.2;
  EXPECT_NEAR(mi_of(product), 0.0, 1e-15);
  RMatrix noisy(2, 2);
  noisy << 0.4, 0.1, 0.1, 0.4;
  EXPECT_NEAR(mi_of(noisy), 0.27807, 1e-5);
}

TEST(MutualInformationTest, RejectsInvalidJoint) {
  RMatrix bad(1, 2);
  bad << 0.5, 0.4;
  EXPECT_THROW(JointDistribution{bad}, InvariantError);
  bad << 1.5, -0.5;
  EXPECT_THROW(JointDistribution{bad}, InvariantError);
}

TEST(BinRuleTest, Validation) {
  EXPECT_THROW(BinRule({1, 4}), InvariantError);
  EXPECT_THROW(BinRule({0, 2, 2, 4}), InvariantError);
  EXPECT_THROW(BinRule({0}), InvariantError);
  const BinRule r({0, 2, 5});
  EXPECT_EQ(r.bins(), 2);
  EXPECT_EQ(r.bin_of(0), 0);
  EXPECT_EQ(r.bin_of(1), 0);
  EXPECT_EQ(r.bin_of(2), 1);
  EXPECT_EQ(r.bin_of(4), 1);
  EXPECT_THROW(r.bin_of(5), std::out_of_range);
}

TEST(GreedyBinningTest, FourOutcomeExample) {
  RMatrix q(2, 4);
  q << 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5;
  std::vector<double> trace;
  const auto rule = greedy_bin_edges(TransitionMatrix(q), 2, &trace);
  EXPECT_EQ(rule.edges(), (std::vector<int>{0, 2, 4}));
  ASSERT_EQ(trace.size(), 2u);
  EXPECT_NEAR(trace[0], 0.0, 1e-15);
  EXPECT_NEAR(trace[1], 1.0, 1e-12);
}

TEST(GreedyBinningTest, TiesGoToSmallestPosition) {
  RMatrix q(2, 4);
  q << 1, 0, 0, 0, 0, 0, 0, 1;
  const auto rule = greedy_bin_edges(TransitionMatrix(q), 2);
  EXPECT_EQ(rule.edges(), (std::vector<int>{0, 1, 4}));
}

// every two-bin partition, scored independently of the greedy code
TEST(GreedyBinningTest, MatchesExhaustiveForTwoBins) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const RMatrix q = testing::random_stochastic(3, 9, rng, 0.0);
    double best = -1.0;
    int best_pos = -1;
    for (int pos = 1; pos < 9; ++pos) {
      RMatrix joint(3, 2);
      joint.col(0) = q.leftCols(pos).rowwise().sum() / 3.0;
      joint.col(1) = q.rightCols(9 - pos).rowwise().sum() / 3.0;
      const double info = mi_of(joint);
      if (info > best + 1e-12) {
        best = info;
        best_pos = pos;
      }
    }
    std::vector<double> trace;
    const auto rule = greedy_bin_edges(TransitionMatrix(q), 2, &trace);
    EXPECT_EQ(rule.edges(), (std::vector<int>{0, best_pos, 9}));
    EXPECT_NEAR(trace.back(), best, 1e-12);
  }
}

TEST(GreedyBinningTest, TraceNondecreasingAndFullResolution) {
  const auto cfg = build_two_ion_model();
  const auto q = true_transition_matrix(cfg);
  std::vector<double> trace;
  const auto rule = greedy_bin_edges(q, 61, &trace);
  EXPECT_EQ(rule, BinRule::identity(61));
  for (std::size_t g = 1; g < trace.size(); ++g) EXPECT_GE(trace[g], trace[g - 1] - 1e-12);
  EXPECT_NEAR(trace.back(), mutual_information(equalized_joint(q)), 1e-12);
  EXPECT_THROW(greedy_bin_edges(q, 62), std::invalid_argument);
  EXPECT_THROW(greedy_bin_edges(q, 0), std::invalid_argument);
}

TEST(BinningTest, EqualizeAndBinCommute) {
  std::mt19937_64 rng(11);
  const TransitionMatrix q(testing::random_stochastic(3, 12, rng, 0.0));
  const BinRule rule({0, 3, 4, 9, 12});
  const RMatrix a = equalized_joint(apply_binning_transition(q, rule)).matrix();
  const RMatrix b = bin_columns(equalized_joint(q).matrix(), rule);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BinningTest, HistogramConservesCounts) {
  const auto cfg = build_two_ion_model();
  const auto h = sample_experiments(cfg);
  const BinRule rule({0, 1, 5, 17, 30, 61});
  const auto binned = apply_binning_histogram(h, rule);
  ASSERT_EQ(binned.states(), h.states());
  for (std::size_t j = 0; j < h.states(); ++j) {
    EXPECT_EQ(binned.counts[j].cols(), 5);
    for (Eigen::Index i = 0; i < h.unitaries(); ++i) {
      EXPECT_EQ(binned.trials(j, i), h.trials(j, i));
      EXPECT_EQ(binned.counts[j](i, 1), h.counts[j].row(i).segment(1, 4).sum());
    }
  }
  EXPECT_THROW(apply_binning_histogram(h, BinRule({0, 60})), DimensionError);
}

TEST(SplitTest, SizesConservationAndDeterminism) {
  const auto cfg = build_two_ion_model();
  const auto h = sample_experiments(cfg);
  const auto [train, rest] = split_training_set(h, 0.1, 42);
  ASSERT_EQ(train.states(), 1u);
  ASSERT_EQ(rest.states(), h.states());
  for (Eigen::Index i = 0; i < h.unitaries(); ++i) {
    EXPECT_EQ(train.trials(0, i), 556);
    EXPECT_EQ(rest.trials(0, i), 5000);
    EXPECT_EQ(train.counts[0].row(i) + rest.counts[0].row(i), h.counts[0].row(i));
    EXPECT_GE(train.counts[0].row(i).minCoeff(), 0);
    EXPECT_GE(rest.counts[0].row(i).minCoeff(), 0);
  }
  EXPECT_EQ(rest.counts[1], h.counts[1]);
  const auto again = split_training_set(h, 0.1, 42);
  EXPECT_TRUE(again.first == train);
  EXPECT_FALSE(split_training_set(h, 0.1, 43).first == train);
  EXPECT_THROW(split_training_set(h, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_training_set(h, 1.0, 1), std::invalid_argument);
}

TEST(SplitTest, TrainingDrawIsHypergeometric) {
  // one row, two outcomes of 500 each; the training count of outcome 0 has
  // mean 50 and variance 100 * 0.5 * 0.5 * 900 / 999
  HistogramSet h;
  CountMatrix c(1, 2);
  c << 500, 500;
  h.counts.push_back(c);
  double sum = 0.0, sum2 = 0.0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    const auto train = split_training_set(h, 0.1, static_cast<std::uint64_t>(r)).first;
    const double x = static_cast<double>(train.counts[0](0, 0));
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / reps;
  const double var = sum2 / reps - mean * mean;
  const double expected_var = 100.0 * 0.25 * 900.0 / 999.0;
  EXPECT_NEAR(mean, 50.0, 5.0 * std::sqrt(expected_var / reps));
  EXPECT_NEAR(var, expected_var, 0.3 * expected_var);
}

}  // namespace
}  // namespace qtomo
