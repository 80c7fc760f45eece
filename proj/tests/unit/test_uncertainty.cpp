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
#include <numeric>

#include "fixtures.hpp"

namespace qtomo {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> one_to_hundred() {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

TEST(QuantileTest, InterpolatesOrderStatistics) {
  const auto v = one_to_hundred();
  EXPECT_NEAR(empirical_quantile(v, 0.025), 3.475, 1e-12);
  EXPECT_NEAR(empirical_quantile(v, 0.975), 97.525, 1e-12);
  EXPECT_EQ(empirical_quantile(v, 0.0), 1.0);
  EXPECT_EQ(empirical_quantile(v, 1.0), 100.0);
  EXPECT_EQ(empirical_quantile({4.0, 1.0, 3.0}, 0.5), 3.0);
  EXPECT_THROW(empirical_quantile({}, 0.5), std::invalid_argument);
  EXPECT_THROW(empirical_quantile(v, 1.5), std::invalid_argument);
}

TEST(ConfidenceIntervalTest, Basic) {
  const auto ci = ci_basic(50.5, one_to_hundred());
  EXPECT_NEAR(ci.lower, 3.475, 1e-12);
  EXPECT_NEAR(ci.upper, 97.525, 1e-12);
  EXPECT_THROW(ci_basic(0.0, std::vector<double>(19, 1.0)), std::invalid_argument);
  EXPECT_THROW(ci_basic(0.0, one_to_hundred(), 1.0), std::invalid_argument);
}

TEST(ConfidenceIntervalTest, BiasCorrectedShift) {
  const auto v = one_to_hundred();
  // 70 of 100 samples below theta
  const double z0 = 0.5244005127080407;
  EXPECT_NEAR(normal_cdf(z0), 0.7, 1e-12);
  const auto ci = ci_bias_corrected(70.5, v);
  EXPECT_FALSE(ci.degenerate);
  EXPECT_NEAR(ci.lower, empirical_quantile(v, normal_cdf(2 * z0 - 1.959963984540054)), 1e-9);
  EXPECT_NEAR(ci.upper, empirical_quantile(v, normal_cdf(2 * z0 + 1.959963984540054)), 1e-9);

  // median estimate: plain percentile interval
  const auto mid = ci_bias_corrected(50.5, v);
  EXPECT_NEAR(mid.lower, 3.475, 1e-9);
  EXPECT_NEAR(mid.upper, 97.525, 1e-9);
}

TEST(ConfidenceIntervalTest, AffineEquivariance) {
  const auto v = one_to_hundred();
  std::vector<double> w;
  for (double x : v) w.push_back(0.01 * x - 3.0);
  for (auto method : {CiMethod::kBasic, CiMethod::kBiasCorrected}) {
    const auto a = confidence_interval(method, 62.5, v);
    const auto b = confidence_interval(method, 0.01 * 62.5 - 3.0, w);
    EXPECT_NEAR(b.lower, 0.01 * a.lower - 3.0, 1e-12) << to_string(method);
    EXPECT_NEAR(b.upper, 0.01 * a.upper - 3.0, 1e-12) << to_string(method);
  }
}

TEST(ConfidenceIntervalTest, DegenerateBiasCorrection) {
  const auto ci = ci_bias_corrected(0.0, one_to_hundred());
  EXPECT_TRUE(ci.degenerate);
  EXPECT_EQ(ci.lower, 1.0);
  EXPECT_EQ(ci.upper, 100.0);
}

TEST(ConfidenceIntervalTest, OneSidedCombination) {
  const auto v = one_to_hundred();
  // identical min and max samples reduce to the two-sided interval
  for (auto method : {CiMethod::kBasic, CiMethod::kBiasCorrected}) {
    const auto c = combine_one_sided(v, v, 55.5, 55.5, method);
    const auto two = confidence_interval(method, 55.5, v);
    EXPECT_EQ(c.lower, two.lower);
    EXPECT_EQ(c.upper, two.upper);
  }
  std::vector<double> up;
  for (double x : v) up.push_back(x + 200.0);
  const auto c = combine_one_sided(v, up, 50.5, 250.5, CiMethod::kBasic);
  EXPECT_NEAR(c.lower, 3.475, 1e-12);
  EXPECT_NEAR(c.upper, 297.525, 1e-12);
}

class BootstrapTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg_ = new ExperimentConfig(build_two_ion_model());
    raw_ = sample_experiments(*cfg_);
    fit_ = fit_histograms(raw_, cfg_->model, {}, cfg_->seed);
  }
  static void TearDownTestSuite() { delete cfg_; }

  static ExperimentConfig* cfg_;
  static HistogramSet raw_;
  static FitResult fit_;
};

ExperimentConfig* BootstrapTest::cfg_ = nullptr;
HistogramSet BootstrapTest::raw_;
FitResult BootstrapTest::fit_;

TEST_F(BootstrapTest, ResampleIsDeterministicAndKeepsShape) {
  const auto& est = fit_.estimate;
  const auto a = resample(est, cfg_->model, fit_.binned, 5);
  EXPECT_TRUE(a == resample(est, cfg_->model, fit_.binned, 5));
  EXPECT_FALSE(a == resample(est, cfg_->model, fit_.binned, 6));
  for (std::size_t j = 0; j < a.states(); ++j)
    for (Eigen::Index i = 0; i < a.unitaries(); ++i) EXPECT_EQ(a.trials(j, i), fit_.binned.trials(j, i));
}

TEST_F(BootstrapTest, ResampleFrequenciesWithinFiveSigma) {
  const auto& est = fit_.estimate;
  HistogramSet big = fit_.binned;
  for (auto& c : big.counts) c *= 20;
  const auto h = resample(est, cfg_->model, big, 77);
  const auto probs = fitted_probabilities(est, cfg_->model);
  for (std::size_t j = 0; j < h.states(); ++j) {
    for (Eigen::Index i = 0; i < h.unitaries(); ++i) {
      const double n = static_cast<double>(big.trials(j, i));
      for (Eigen::Index c = 0; c < h.outcomes(); ++c) {
        const double p = probs[j](i, c);
        EXPECT_LE(std::abs(static_cast<double>(h.counts[j](i, c)) - n * p), 5 * std::sqrt(n * p * (1 - p)) + 1e-9);
      }
    }
  }
}

TEST_F(BootstrapTest, SmallRunAndWorkerIndependence) {
  BootstrapOptions opts;
  opts.t = 4;
  opts.master_seed = 99;
  const std::vector<Observable> obs{bell_observable(), second_ion_bright_observable()};
  const auto one = bootstrap_run(fit_.estimate, cfg_->model, fit_.binned, obs, opts);
  opts.workers = 3;
  const auto three = bootstrap_run(fit_.estimate, cfg_->model, fit_.binned, obs, opts);
  ASSERT_EQ(one.records.size(), 4u);
  EXPECT_EQ(one.failures(), 0u);
  for (std::size_t b = 0; b < 4; ++b) {
    EXPECT_EQ(one.records[b].index, b);
    EXPECT_LE(one.records[b].lambda, 1e-9);
    EXPECT_EQ(one.records[b].lambda, three.records[b].lambda);
    EXPECT_EQ(one.records[b].bounds[0][1].upper, three.records[b].bounds[0][1].upper);
    EXPECT_LE(one.records[b].bounds[0][0].lower, one.records[b].bounds[0][0].upper);
  }
  EXPECT_EQ(one.bound_samples(0, 0, false).size(), 4u);

  opts.t = 1;
  EXPECT_THROW(bootstrap_run(fit_.estimate, cfg_->model, fit_.binned, obs, opts), std::invalid_argument);
}

TEST_F(BootstrapTest, LikelihoodRatioUsesTiesAsAtMost) {
  BootstrapRun run;
  run.t = 4;
  const auto w = fit_.binned.as_weights();
  const double lambda0 = fit_.estimate.loglike - likelihood_frequency(w);
  EXPECT_LE(lambda0, 0.0);
  for (double l : {lambda0 - 1.0, lambda0, lambda0 + 1.0, lambda0 + 2.0}) {
    BootstrapRecord r;
    r.ok = true;
    r.lambda = l;
    run.records.push_back(r);
  }
  BootstrapRecord failed;
  failed.lambda = -1e9;
  run.records.push_back(failed);
  const auto rep = lr_test(fit_.estimate, w, run);
  EXPECT_EQ(rep.lambda_samples.size(), 4u);
  EXPECT_DOUBLE_EQ(rep.p_value, 0.5);
}

TEST(BootstrapRunTest, UnreliableAboveFivePercent) {
  BootstrapRun run;
  run.t = 20;
  run.records.resize(20);
  for (auto& r : run.records) r.ok = true;
  run.records[0].ok = false;
  EXPECT_FALSE(run.unreliable());
  run.records[1].ok = false;
  EXPECT_TRUE(run.unreliable());
}

}  // namespace
}  // namespace qtomo
