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

// Measurement model, ground-truth ion-trap example and the experiment sampler.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qtomo/qcore.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

/// N x C row-stochastic matrix: entry (k, c) is P(observed c | hidden subspace k).
class TransitionMatrix {
 public:
  static constexpr double kRowTolerance = 1e-10;

  TransitionMatrix() = default;
  explicit TransitionMatrix(RMatrix q) : q_(std::move(q)) {
    if (q_.rows() == 0 || q_.cols() == 0) throw InvariantError("TransitionMatrix: empty");
    if (!q_.allFinite()) throw InvariantError("TransitionMatrix: non-finite entry");
    if (q_.minCoeff() < -kRowTolerance || q_.maxCoeff() > 1.0 + kRowTolerance) {
      throw InvariantError("TransitionMatrix: entries outside [0,1]");
    }
    for (Eigen::Index k = 0; k < q_.rows(); ++k) {
      if (std::abs(q_.row(k).sum() - 1.0) > kRowTolerance) {
        throw InvariantError("TransitionMatrix: row " + std::to_string(k) + " does not sum to 1");
      }
    }
    q_ = q_.cwiseMax(0.0).cwiseMin(1.0);
  }

  /// Clips to [0,1] and renormalizes every row. A row with no mass becomes uniform.
  static TransitionMatrix clipped(RMatrix q) {
    q = q.cwiseMax(0.0).cwiseMin(1.0);
    for (Eigen::Index k = 0; k < q.rows(); ++k) {
      const double s = q.row(k).sum();
      if (s > 0.0) {
        q.row(k) /= s;
      } else {
        q.row(k).setConstant(1.0 / static_cast<double>(q.cols()));
      }
    }
    return TransitionMatrix(std::move(q));
  }

  const RMatrix& matrix() const { return q_; }
  Eigen::Index subspaces() const { return q_.rows(); }
  Eigen::Index outcomes() const { return q_.cols(); }
  double operator()(Eigen::Index k, Eigen::Index c) const { return q_(k, c); }

 private:
  RMatrix q_;
};

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// counts[j](i, b): state family j (0 = reference), unitary i, outcome b.
struct HistogramSet {
  std::vector<CountMatrix> counts;

  std::size_t states() const { return counts.size(); }
  Eigen::Index unitaries() const { return counts.empty() ? 0 : counts.front().rows(); }
  Eigen::Index outcomes() const { return counts.empty() ? 0 : counts.front().cols(); }

  std::int64_t trials(std::size_t j, Eigen::Index i) const { return counts[j].row(i).sum(); }

  /// Counts as real weights, the form the estimator consumes.
  std::vector<RMatrix> as_weights() const {
    std::vector<RMatrix> out;
    out.reserve(counts.size());
    for (const auto& c : counts) out.push_back(c.cast<double>());
    return out;
  }

  bool operator==(const HistogramSet& o) const {
    if (counts.size() != o.counts.size()) return false;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (counts[j].rows() != o.counts[j].rows() || counts[j].cols() != o.counts[j].cols()) return false;
      if (counts[j] != o.counts[j]) return false;
    }
    return true;
  }
};

/// Known parts of the experiment: the reference state, the high-fidelity
/// unitaries (first one is the identity) and the underlying projectors.
class MeasurementModel {
 public:
  MeasurementModel(DensityMatrix rho0, std::vector<UnitaryOp> unitaries, Povm projectors)
      : rho0_(std::move(rho0)), unitaries_(std::move(unitaries)), projectors_(std::move(projectors)) {
    const auto d = rho0_.dim();
    if (unitaries_.empty()) throw InvariantError("MeasurementModel: no unitaries");
    for (const auto& u : unitaries_) require_same_dim(u.dim(), d, "MeasurementModel unitary");
    require_same_dim(projectors_.dim(), d, "MeasurementModel projectors");
    if (max_abs(unitaries_.front().matrix() - CMatrix::Identity(d, d)) > tol::kUnitary) {
      throw InvariantError("MeasurementModel: first unitary must be the identity");
    }
    const auto n = projectors_.size();
    for (std::size_t a = 0; a < n; ++a) {
      const CMatrix& pa = projectors_[a].matrix();
      if (max_abs(pa) < 1e-12) throw InvariantError("MeasurementModel: zero projector");
      for (std::size_t b = 0; b < n; ++b) {
        const CMatrix prod = pa * projectors_[b].matrix();
        const CMatrix expected = a == b ? pa : CMatrix::Zero(d, d);
        if (max_abs(prod - expected) > 1e-10) {
          throw InvariantError("MeasurementModel: projectors are not mutually orthogonal projectors");
        }
      }
    }
    engineered_.resize(unitaries_.size());
    for (std::size_t i = 0; i < unitaries_.size(); ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        engineered_[i].push_back(heisenberg(projectors_[k].matrix(), unitaries_[i].matrix()));
      }
    }
  }

  const DensityMatrix& rho0() const { return rho0_; }
  const std::vector<UnitaryOp>& unitaries() const { return unitaries_; }
  const Povm& projectors() const { return projectors_; }
  Eigen::Index dim() const { return rho0_.dim(); }
  std::size_t num_unitaries() const { return unitaries_.size(); }
  std::size_t num_subspaces() const { return projectors_.size(); }

  /// U_i^dagger Pi_k U_i.
  const CMatrix& engineered_projector(std::size_t i, std::size_t k) const { return engineered_[i][k]; }

  /// (r x N) matrix of Tr(U_i^dagger Pi_k U_i tau).
  RMatrix populations(const CMatrix& tau) const {
    RMatrix p(static_cast<Eigen::Index>(num_unitaries()), static_cast<Eigen::Index>(num_subspaces()));
    for (std::size_t i = 0; i < num_unitaries(); ++i)
      for (std::size_t k = 0; k < num_subspaces(); ++k)
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = trace_product(engineered_[i][k], tau);
    return p;
  }

  /// Engineered measurement operators F_{i,c} = sum_k Q_{k,c} U_i^dagger Pi_k U_i, index i * C + c.
  std::vector<CMatrix> engineered_povm(const RMatrix& q) const {
    std::vector<CMatrix> out;
    const auto d = dim();
    out.reserve(num_unitaries() * static_cast<std::size_t>(q.cols()));
    for (std::size_t i = 0; i < num_unitaries(); ++i) {
      for (Eigen::Index c = 0; c < q.cols(); ++c) {
        CMatrix f = CMatrix::Zero(d, d);
        for (std::size_t k = 0; k < num_subspaces(); ++k) f += q(static_cast<Eigen::Index>(k), c) * engineered_[i][k];
        out.push_back(std::move(f));
      }
    }
    return out;
  }

 private:
  DensityMatrix rho0_;
  std::vector<UnitaryOp> unitaries_;
  Povm projectors_;
  std::vector<std::vector<CMatrix>> engineered_;
};

struct ExperimentConfig {
  MeasurementModel model;
  std::vector<DensityMatrix> true_states;  // sigma_1..sigma_s (simulation ground truth)
  std::vector<double> poisson_means;        // one per subspace
  int max_count = 61;                       // M outcome columns
  std::int64_t n_trials = 5000;
  std::int64_t reference_factor_num = 10;
  std::int64_t reference_factor_den = 9;
  std::uint64_t seed = 42;

  Eigen::Index dim() const { return model.dim(); }

  /// ceil(n * num / den) trials for every reference experiment.
  std::int64_t reference_trials() const {
    return (n_trials * reference_factor_num + reference_factor_den - 1) / reference_factor_den;
  }

  std::int64_t trials_for_state(std::size_t j) const { return j == 0 ? reference_trials() : n_trials; }

  /// tau_0 = rho0, tau_j = sigma_j.
  const DensityMatrix& tau(std::size_t j) const { return j == 0 ? model.rho0() : true_states.at(j - 1); }
  std::size_t num_state_families() const { return true_states.size() + 1; }

  void validate() const {
    if (poisson_means.size() != model.num_subspaces()) {
      throw InvariantError("ExperimentConfig: poisson_means must have one entry per projector");
    }
    for (std::size_t a = 0; a < poisson_means.size(); ++a) {
      if (!(poisson_means[a] >= 0.0) || !std::isfinite(poisson_means[a])) {
        throw InvariantError("ExperimentConfig: poisson_means must be finite and nonnegative");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (poisson_means[a] == poisson_means[b]) throw InvariantError("ExperimentConfig: poisson_means must be distinct");
      }
    }
    if (max_count < 1) throw InvariantError("ExperimentConfig: max_count must be positive");
    if (n_trials < 1) throw InvariantError("ExperimentConfig: n_trials must be positive");
    if (reference_factor_num < 1 || reference_factor_den < 1) {
      throw InvariantError("ExperimentConfig: reference_trial_factor must be a positive rational");
    }
    for (const auto& s : true_states) require_same_dim(s.dim(), dim(), "ExperimentConfig true state");
  }
};

// ---------------------------------------------------------------------------
// the two-ion example

/// Basis order |up up>, |up down>, |down up>, |down down>; "up" (bright) is index 0.
namespace two_ion {
inline CVector basis_ket(int index) {
  CVector v = CVector::Zero(4);
  v(index) = 1.0;
  return v;
}
inline CVector up_up() { return basis_ket(0); }
inline CVector up_down() { return basis_ket(1); }
inline CVector down_up() { return basis_ket(2); }
inline CVector down_down() { return basis_ket(3); }

inline CVector phi_plus() { return (up_up() + down_down()) / std::sqrt(2.0); }

/// 0.99 |Phi+><Phi+| + (0.01/4) 1
inline DensityMatrix noisy_bell_state(double fidelity_weight = 0.99) {
  return DensityMatrix(fidelity_weight * ket_projector(phi_plus()) +
                       (1.0 - fidelity_weight) / 4.0 * CMatrix::Identity(4, 4));
}

inline Povm bright_count_projectors() {
  std::vector<MeasurementOperator> pis;
  pis.emplace_back(ket_projector(down_down()));                              // no ion bright
  pis.emplace_back(ket_projector(down_up()) + ket_projector(up_down()));     // one ion bright
  pis.emplace_back(ket_projector(up_up()));                                  // both bright
  return Povm(std::move(pis));
}

inline std::vector<UnitaryOp> collective_rotations() {
  constexpr double pi = std::numbers::pi;
  return {UnitaryOp::identity(4, "U(0,0)^2"), rotation_gate(pi / 2, 0, 2), rotation_gate(pi, 0, 2),
          rotation_gate(pi / 2, pi / 2, 2)};
}
}  // namespace two_ion

inline MeasurementModel build_two_ion_measurement_model() {
  return MeasurementModel(DensityMatrix::pure(two_ion::up_up()), two_ion::collective_rotations(),
                          two_ion::bright_count_projectors());
}

inline ExperimentConfig build_two_ion_model() {
  ExperimentConfig cfg{build_two_ion_measurement_model(), {two_ion::noisy_bell_state()}, {2.0, 20.0, 40.0}};
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// operations

inline double poisson_pmf(int count, double mean) {
  if (mean == 0.0) return count == 0 ? 1.0 : 0.0;
  return std::exp(count * std::log(mean) - mean - std::lgamma(count + 1.0));
}

/// Column b < M-1 holds Poisson(b; mean_k); the last column holds the whole upper
/// tail P(count >= M-1), so every row sums to one.
inline TransitionMatrix true_transition_matrix(const ExperimentConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(cfg.poisson_means.size());
  const int m = cfg.max_count;
  RMatrix q = RMatrix::Zero(n, m);
  for (Eigen::Index k = 0; k < n; ++k) {
    double head = 0.0;
    for (int b = 0; b + 1 < m; ++b) {
      q(k, b) = poisson_pmf(b, cfg.poisson_means[static_cast<std::size_t>(k)]);
      head += q(k, b);
    }
    q(k, m - 1) = std::max(0.0, 1.0 - head);
  }
  return TransitionMatrix(std::move(q));
}

/// P(i, k) = Tr(Pi_k U_i rho0 U_i^dagger) for the known states.
inline RMatrix population_matrix(const MeasurementModel& model) { return model.populations(model.rho0().matrix()); }
inline RMatrix population_matrix(const ExperimentConfig& cfg) { return population_matrix(cfg.model); }

/// p[j](i, b) = sum_k Q_{k,b} Tr(Pi_{i,k} tau_j).
inline std::vector<RMatrix> outcome_probabilities(const MeasurementModel& model, const std::vector<CMatrix>& taus,
                                                  const RMatrix& q) {
  std::vector<RMatrix> out;
  out.reserve(taus.size());
  for (const auto& tau : taus) out.push_back(model.populations(tau) * q);
  return out;
}

inline std::vector<RMatrix> experiment_probabilities(const ExperimentConfig& cfg) {
  std::vector<CMatrix> taus;
  for (std::size_t j = 0; j < cfg.num_state_families(); ++j) taus.push_back(cfg.tau(j).matrix());
  return outcome_probabilities(cfg.model, taus, true_transition_matrix(cfg).matrix());
}

/// Draws trials[j] multinomial trials for every row of probs[j]. Row (j, i) uses
/// the substream derive_seed(seed, {stage, j, i}).
inline HistogramSet sample_from_probabilities(const std::vector<RMatrix>& probs, const std::vector<std::int64_t>& trials,
                                              std::uint64_t seed, std::uint64_t stage = seed_stage::kSimulate) {
  if (trials.size() != probs.size()) throw DimensionError("sample_from_probabilities: trials/probs size mismatch");
  HistogramSet h;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const RMatrix& p = probs[j];
    CountMatrix counts(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double total = p.row(i).sum();
      if (std::abs(total - 1.0) > 1e-8) {
        throw InvariantError("sample_from_probabilities: probabilities for experiment (" + std::to_string(j) + "," +
                             std::to_string(i) + ") sum to " + std::to_string(total));
      }
      Rng rng(derive_seed(seed, {stage, j, static_cast<std::uint64_t>(i)}));
      const RVector row = p.row(i).transpose();
      const auto draw = sample_multinomial(trials[j], std::span<const double>(row.data(), row.size()), rng);
      for (Eigen::Index b = 0; b < p.cols(); ++b) counts(i, b) = draw[static_cast<std::size_t>(b)];
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

inline HistogramSet sample_experiments(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::int64_t> trials;
  for (std::size_t j = 0; j < cfg.num_state_families(); ++j) trials.push_back(cfg.trials_for_state(j));
  return sample_from_probabilities(experiment_probabilities(cfg), trials, cfg.seed);
}

}  // namespace qtomo
