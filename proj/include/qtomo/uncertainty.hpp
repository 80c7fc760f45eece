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

// Parametric bootstrap over the binned fit, bootstrap confidence intervals and
// the likelihood-ratio goodness-of-fit test.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "qtomo/bounds.hpp"
#include "qtomo/estimator.hpp"
#include "qtomo/iontrap.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

inline constexpr double kUnreliableFailureFraction = 0.05;

/// Model probabilities of every binned experiment under a fit; tau_0 = rho0.
inline std::vector<RMatrix> fitted_probabilities(const Estimate& est, const MeasurementModel& model) {
  std::vector<CMatrix> taus{model.rho0().matrix()};
  for (const auto& s : est.sigma_hats) taus.push_back(s.matrix());
  return outcome_probabilities(model, taus, est.q_hat.matrix());
}

/// Binned parametric resample: row (j, i) draws as many trials as the same row
/// of `shape` from the fitted probabilities.
inline HistogramSet resample(const Estimate& est, const MeasurementModel& model, const HistogramSet& shape,
                             std::uint64_t seed) {
  const auto probs = fitted_probabilities(est, model);
  if (probs.size() != shape.states()) throw DimensionError("resample: state families differ from the data");
  HistogramSet out;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const RMatrix& p = probs[j];
    if (p.rows() != shape.counts[j].rows() || p.cols() != shape.counts[j].cols()) {
      throw DimensionError("resample: histogram shape differs from the fitted model");
    }
    CountMatrix counts(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double total = p.row(i).sum();
      if (std::abs(total - 1.0) > 1e-8) {
        throw InvariantError("resample: fitted probabilities of experiment (" + std::to_string(j) + "," +
                             std::to_string(i) + ") sum to " + std::to_string(total));
      }
      Rng rng(derive_seed(seed, {seed_stage::kBootstrap, j, static_cast<std::uint64_t>(i)}));
      const RVector row = p.row(i).transpose();
      const auto draw = sample_multinomial(shape.trials(j, i), std::span<const double>(row.data(), row.size()), rng);
      for (Eigen::Index c = 0; c < p.cols(); ++c) counts(i, c) = draw[static_cast<std::size_t>(c)];
    }
    out.counts.push_back(std::move(counts));
  }
  return out;
}

struct BootstrapRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string failure;  // empty when ok
  Estimate estimate;
  std::vector<std::vector<ObservableBounds>> bounds;  // [state][observable]
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

struct BootstrapRun {
  std::size_t t = 0;
  std::uint64_t master_seed = 0;
  std::vector<BootstrapRecord> records;  // ordered by index

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok; }));
  }
  bool unreliable() const { return static_cast<double>(failures()) > kUnreliableFailureFraction * static_cast<double>(t); }

  /// Values of a bound over successful resamples; `upper` selects the SDP maximum.
  std::vector<double> bound_samples(std::size_t state, std::size_t observable, bool upper) const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.ok) out.push_back(upper ? r.bounds[state][observable].upper : r.bounds[state][observable].lower);
    }
    return out;
  }

  std::vector<double> lambda_samples() const {
    std::vector<double> out;
    for (const auto& r : records)
      if (r.ok) out.push_back(r.lambda);
    return out;
  }
};

struct BootstrapOptions {
  std::size_t t = 200;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  SolverOptions solver;
};

/// One resample: draw, re-initialize Q from the resampled reference rows, refit,
/// bound every observable for every probing state, and Lambda* = L - L_frq.
inline BootstrapRecord bootstrap_one(const Estimate& est, const MeasurementModel& model, const HistogramSet& shape,
                                     const std::vector<Observable>& observables, const BootstrapOptions& opts,
                                     std::size_t index) {
  BootstrapRecord rec;
  rec.index = index;
  try {
    const auto h = resample(est, model, shape, derive_seed(opts.master_seed, {seed_stage::kBootstrap, index}));
    const auto w = h.as_weights();
    const auto q_init = init_transition(w.front(), population_matrix(model));
    rec.estimate = alternate(w, model, q_init, opts.solver);
    if (!rec.estimate.converged) throw std::runtime_error("fit did not converge");
    const auto basis = build_constraint_basis(rec.estimate.q_hat, model);
    for (const auto& sigma : rec.estimate.sigma_hats) {
      std::vector<ObservableBounds> row;
      for (const auto& o : observables) {
        row.push_back(solve_bounds(o, sigma, basis));
        if (!row.back().valid) throw std::runtime_error("bounds for '" + o.label() + "' did not converge");
      }
      rec.bounds.push_back(std::move(row));
    }
    rec.lambda = rec.estimate.loglike - likelihood_frequency(w);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  return rec;
}

/// Runs opts.t resamples on up to opts.workers threads. Record b depends only
/// on (est, shape, master_seed, b), so the result does not depend on scheduling.
inline BootstrapRun bootstrap_run(const Estimate& est, const MeasurementModel& model, const HistogramSet& shape,
                                  const std::vector<Observable>& observables, const BootstrapOptions& opts) {
  if (opts.t < 2) throw std::invalid_argument("bootstrap_run: need at least 2 resamples");
  opts.solver.validate();
  BootstrapRun run;
  run.t = opts.t;
  run.master_seed = opts.master_seed;
  run.records.resize(opts.t);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t b = next++; b < opts.t; b = next++) {
      run.records[b] = bootstrap_one(est, model, shape, observables, opts, b);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(opts.t)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(work);
  }
  return run;
}

// ---------------------------------------------------------------------------
// intervals

enum class CiMethod { kBasic, kBiasCorrected };

inline const char* to_string(CiMethod m) { return m == CiMethod::kBasic ? "basic" : "bias_corrected"; }

struct ConfidenceInterval {
  double level = 0.95;
  CiMethod method = CiMethod::kBasic;
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;  // bias correction undefined; sample range returned
};

inline constexpr std::size_t kMinCiSamples = 20;

/// Linear interpolation between order statistics at one-based position
/// p (t - 1) + 1.
inline double empirical_quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("empirical_quantile: no samples");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("empirical_quantile: p outside [0,1]");
  std::sort(samples.begin(), samples.end());
  const double pos = p * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

namespace detail {

inline void check_ci_input(const std::vector<double>& samples, double level) {
  if (samples.size() < kMinCiSamples) {
    throw std::invalid_argument("confidence interval: need at least " + std::to_string(kMinCiSamples) +
                                " samples, got " + std::to_string(samples.size()));
  }
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence interval: level outside (0,1)");
}

}  // namespace detail

/// [2 theta - q_{1 - a/2}, 2 theta - q_{a/2}], a = 1 - level.
inline ConfidenceInterval ci_basic(double theta_hat, const std::vector<double>& samples, double level = 0.95) {
  detail::check_ci_input(samples, level);
  const double alpha = 1.0 - level;
  ConfidenceInterval ci;
  ci.level = level;
  ci.method = CiMethod::kBasic;
  ci.lower = 2.0 * theta_hat - empirical_quantile(samples, 1.0 - alpha / 2.0);
  ci.upper = 2.0 * theta_hat - empirical_quantile(samples, alpha / 2.0);
  return ci;
}

/// Percentile interval with the quantile levels shifted by 2 z0,
/// z0 = Phi^{-1}(#{samples < theta} / t).
inline ConfidenceInterval ci_bias_corrected(double theta_hat, const std::vector<double>& samples, double level = 0.95) {
  detail::check_ci_input(samples, level);
  ConfidenceInterval ci;
  ci.level = level;
  ci.method = CiMethod::kBiasCorrected;
  const auto below = std::count_if(samples.begin(), samples.end(), [&](double s) { return s < theta_hat; });
  if (below == 0 || below == static_cast<std::ptrdiff_t>(samples.size())) {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    ci.lower = *mn;
    ci.upper = *mx;
    ci.degenerate = true;
    return ci;
  }
  const boost::math::normal_distribution<double> std_normal;
  const double z0 = boost::math::quantile(std_normal, static_cast<double>(below) / static_cast<double>(samples.size()));
  const double alpha = 1.0 - level;
  const double z_lo = boost::math::quantile(std_normal, alpha / 2.0);
  const double z_hi = boost::math::quantile(std_normal, 1.0 - alpha / 2.0);
  ci.lower = empirical_quantile(samples, boost::math::cdf(std_normal, 2.0 * z0 + z_lo));
  ci.upper = empirical_quantile(samples, boost::math::cdf(std_normal, 2.0 * z0 + z_hi));
  return ci;
}

inline ConfidenceInterval confidence_interval(CiMethod method, double theta_hat, const std::vector<double>& samples,
                                              double level = 0.95) {
  return method == CiMethod::kBasic ? ci_basic(theta_hat, samples, level)
                                    : ci_bias_corrected(theta_hat, samples, level);
}

/// Lower end: the lower limit of the two-sided interval for the SDP minimum,
/// i.e. a one-sided (1 + level)/2 bound; upper end likewise for the maximum.
inline ConfidenceInterval combine_one_sided(const std::vector<double>& lower_samples,
                                            const std::vector<double>& upper_samples, double lower_hat,
                                            double upper_hat, CiMethod method, double level = 0.95) {
  const auto lo = confidence_interval(method, lower_hat, lower_samples, level);
  const auto hi = confidence_interval(method, upper_hat, upper_samples, level);
  ConfidenceInterval ci;
  ci.level = level;
  ci.method = method;
  ci.lower = lo.lower;
  ci.upper = hi.upper;
  ci.degenerate = lo.degenerate || hi.degenerate;
  return ci;
}

// ---------------------------------------------------------------------------
// likelihood ratio

struct LikelihoodRatioReport {
  double lambda0 = 0.0;
  std::vector<double> lambda_samples;
  double p_value = 0.0;  // fraction of samples <= lambda0
};

inline LikelihoodRatioReport lr_test(const Estimate& est, const Histograms& h, const BootstrapRun& run) {
  LikelihoodRatioReport rep;
  rep.lambda0 = est.loglike - likelihood_frequency(h);
  rep.lambda_samples = run.lambda_samples();
  if (rep.lambda_samples.empty()) throw std::invalid_argument("lr_test: no successful resamples");
  const auto at_most = std::count_if(rep.lambda_samples.begin(), rep.lambda_samples.end(),
                                     [&](double l) { return l <= rep.lambda0; });
  rep.p_value = static_cast<double>(at_most) / static_cast<double>(rep.lambda_samples.size());
  return rep;
}

}  // namespace qtomo
