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

// Alternating maximum-likelihood estimation of the unknown states and the
// transition matrix.
//
// Histograms enter as real weights h[j](i, c): state family j (0 is the known
// reference state rho0), unitary i, binned outcome c. All likelihoods use the
// raw weights (counts), so the gap bounds are in the same units.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtomo/iontrap.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

using Histograms = std::vector<RMatrix>;

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  double t_sigma = 0.3;
  double t_q = 0.25;
  int max_outer_iterations = 2000;
  int max_rrr_iterations = 200000;
  int max_q_iterations = 50000;
  int multi_start = 0;  // extra fits from perturbed initial transition matrices
  std::uint64_t multi_start_seed = 0;

  void validate() const {
    if (!(t_sigma > 0.0) || !(t_q > 0.0)) throw std::invalid_argument("SolverOptions: thresholds must be positive");
    if (max_outer_iterations < 1 || max_rrr_iterations < 0 || max_q_iterations < 0 || multi_start < 0) {
      throw std::invalid_argument("SolverOptions: iteration limits must be nonnegative");
    }
  }
};

/// Objective value and gap bound after each inner iteration.
struct IterationLog {
  std::vector<double> objective;
  std::vector<double> bound;
};

struct Estimate {
  std::vector<DensityMatrix> sigma_hats;
  TransitionMatrix q_hat;
  double loglike = -std::numeric_limits<double>::infinity();
  double s_sigma = 0.0;
  double s_q = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // total log-likelihood after every subproblem call
};

inline Histograms to_weights(const HistogramSet& h) { return h.as_weights(); }

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// sum h ln p over h > 0; -inf if some h > 0 meets p <= 0.
inline double weighted_log(const RMatrix& h, const RMatrix& p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const double w = h(i, c);
      if (w <= 0.0) continue;
      const double pr = p(i, c);
      if (!(pr > 0.0)) return kNegInf;
      total += w * std::log(pr);
    }
  }
  return total;
}

/// sum h ln(p_new / p_old), accurate when the two are close.
inline double weighted_log_ratio(const RMatrix& h, const RMatrix& p_new, const RMatrix& p_old) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const double w = h(i, c);
      if (w <= 0.0) continue;
      if (!(p_new(i, c) > 0.0)) return kNegInf;
      total += w * std::log1p((p_new(i, c) - p_old(i, c)) / p_old(i, c));
    }
  }
  return total;
}

inline std::vector<CMatrix> taus_of(const MeasurementModel& model, const std::vector<DensityMatrix>& sigmas) {
  std::vector<CMatrix> taus;
  taus.reserve(sigmas.size() + 1);
  taus.push_back(model.rho0().matrix());
  for (const auto& s : sigmas) taus.push_back(s.matrix());
  return taus;
}

inline void check_histograms(const Histograms& h, const MeasurementModel& model, Eigen::Index outcomes) {
  if (h.empty()) throw DimensionError("histograms: no state families");
  for (const auto& m : h) {
    if (m.rows() != static_cast<Eigen::Index>(model.num_unitaries())) {
      throw DimensionError("histograms: rows must match the number of unitaries");
    }
    if (m.cols() != outcomes) throw DimensionError("histograms: columns must match the transition matrix");
    if (m.size() > 0 && m.minCoeff() < 0.0) throw InvariantError("histograms: negative weight");
  }
}

/// Euclidean projection of v onto the probability simplex.
inline Eigen::RowVectorXd project_simplex(const Eigen::RowVectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

/// State-subproblem data for one unknown state: positive-weight terms only.
struct StateTerms {
  std::vector<double> weights;
  std::vector<CMatrix> operators;
  double total = 0.0;
};

inline StateTerms state_terms(const RMatrix& h, const std::vector<CMatrix>& engineered, Eigen::Index outcomes) {
  StateTerms t;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const double w = h(i, c);
      if (w <= 0.0) continue;
      t.weights.push_back(w);
      t.operators.push_back(engineered[static_cast<std::size_t>(i * outcomes + c)]);
      t.total += w;
    }
  }
  return t;
}

struct StateEval {
  RVector probs;
  double loglike = kNegInf;
};

inline StateEval evaluate_state(const StateTerms& t, const CMatrix& sigma) {
  StateEval e;
  e.probs.resize(static_cast<Eigen::Index>(t.weights.size()));
  double ll = 0.0;
  for (std::size_t n = 0; n < t.weights.size(); ++n) {
    const double p = trace_product(t.operators[n], sigma);
    e.probs(static_cast<Eigen::Index>(n)) = p;
    ll = p > 0.0 ? ll + t.weights[n] * std::log(p) : kNegInf;
  }
  e.loglike = ll;
  return e;
}

inline double state_log_ratio(const StateTerms& t, const StateEval& next, const StateEval& cur) {
  double total = 0.0;
  for (std::size_t n = 0; n < t.weights.size(); ++n) {
    const auto idx = static_cast<Eigen::Index>(n);
    if (!(next.probs(idx) > 0.0)) return kNegInf;
    total += t.weights[n] * std::log1p((next.probs(idx) - cur.probs(idx)) / cur.probs(idx));
  }
  return total;
}

inline CMatrix r_operator(const StateTerms& t, const StateEval& e, Eigen::Index d) {
  CMatrix r = CMatrix::Zero(d, d);
  for (std::size_t n = 0; n < t.weights.size(); ++n) r += (t.weights[n] / e.probs(static_cast<Eigen::Index>(n))) * t.operators[n];
  return hermitian_part(r);
}

/// Unit-trace Hermitian part. Products M s M are PSD in exact arithmetic;
/// rounding below zero is clipped so it cannot be amplified by later steps.
inline CMatrix normalized(const CMatrix& m) {
  CMatrix h = hermitian_part(m);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.eigenvalues().minCoeff() < 0.0) {
    const RVector clipped = es.eigenvalues().cwiseMax(0.0);
    h = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    h = hermitian_part(h);
  }
  return h / h.trace().real();
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Left pseudo-inverse initialization Q = (P^T P)^{-1} P^T H with H the
/// reference histogram rows as relative frequencies, then clipped to [0,1] and
/// row-renormalized.
inline TransitionMatrix init_transition(const RMatrix& h_ref, const RMatrix& populations) {
  if (h_ref.rows() != populations.rows()) throw DimensionError("init_transition: histogram rows vs populations rows");
  const Eigen::Index n = populations.cols();
  Eigen::JacobiSVD<RMatrix> svd(populations);
  const RVector sv = svd.singularValues();
  const double smax = sv.size() ? sv.maxCoeff() : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-10 * smax) ++rank;
  if (rank < n) {
    throw RankDeficientError("init_transition: population matrix has rank " + std::to_string(rank) + " < " +
                             std::to_string(n) + "; the known states must span the subspaces of the underlying POVM");
  }
  RMatrix freq = h_ref;
  for (Eigen::Index i = 0; i < freq.rows(); ++i) {
    const double s = freq.row(i).sum();
    if (!(s > 0.0)) throw InvariantError("init_transition: reference experiment " + std::to_string(i) + " has no trials");
    freq.row(i) /= s;
  }
  const RMatrix normal = populations.transpose() * populations;
  const RMatrix q = normal.ldlt().solve(populations.transpose() * freq);
  return TransitionMatrix::clipped(q);
}

inline double log_likelihood(const Histograms& h, const std::vector<CMatrix>& taus, const RMatrix& q,
                             const MeasurementModel& model) {
  if (taus.size() != h.size()) throw DimensionError("log_likelihood: one state per histogram family required");
  double total = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double part = detail::weighted_log(h[j], model.populations(taus[j]) * q);
    if (part == detail::kNegInf) return detail::kNegInf;
    total += part;
  }
  return total;
}

/// Total log-likelihood sum_{j,i,c} H ln Tr(U_i^dagger F_c U_i tau_j). Returns
/// -infinity when some observed outcome has probability zero.
inline double log_likelihood(const Histograms& h, const std::vector<DensityMatrix>& sigma_hats,
                             const TransitionMatrix& q, const MeasurementModel& model) {
  detail::check_histograms(h, model, q.outcomes());
  return log_likelihood(h, detail::taus_of(model, sigma_hats), q.matrix(), model);
}

/// Saturated-model log-likelihood sum H ln(H / n_exp), with 0 ln 0 = 0.
inline double likelihood_frequency(const Histograms& h) {
  double total = 0.0;
  for (const auto& m : h) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double n = m.row(i).sum();
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double w = m(i, c);
        if (w > 0.0) total += w * std::log(w / n);
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// state subproblem

struct StateFit {
  std::vector<DensityMatrix> sigmas;
  std::vector<double> s_per_state;
  double s_sigma = 0.0;  // max over states
  int iterations = 0;    // summed over states
  bool converged = false;
  int diluted_steps = 0;
  int degenerate_mixes = 0;
};

/// Gap bound max eig R(sigma) - n_tot for each unknown state at fixed q.
inline std::vector<double> state_gap_bounds(const Histograms& h, const std::vector<DensityMatrix>& sigmas,
                                            const TransitionMatrix& q, const MeasurementModel& model) {
  const auto engineered = model.engineered_povm(q.matrix());
  std::vector<double> out;
  for (std::size_t j = 0; j < sigmas.size(); ++j) {
    const auto terms = detail::state_terms(h[j + 1], engineered, q.outcomes());
    const auto eval = detail::evaluate_state(terms, sigmas[j].matrix());
    if (eval.loglike == detail::kNegInf) {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    out.push_back(max_eigenvalue(detail::r_operator(terms, eval, model.dim())) - terms.total);
  }
  return out;
}

/// R rho R iterations for every unknown state (families j >= 1), each run until
/// its own bound max eig R - n_tot <= t_sigma. A step that would lower the
/// likelihood is replaced by a diluted step N[(1+eR/n) s (1+eR/n)] with e
/// halved until the likelihood does not decrease. If an observed outcome gets
/// probability below 1e-12 the iterate is mixed with 1e-9 of the maximally
/// mixed state.
inline StateFit rrr_maximize_states(const Histograms& h, const TransitionMatrix& q, const MeasurementModel& model,
                                    const std::vector<DensityMatrix>& initial, const SolverOptions& opts,
                                    IterationLog* log = nullptr) {
  detail::check_histograms(h, model, q.outcomes());
  if (initial.size() + 1 != h.size()) throw DimensionError("rrr_maximize_states: one initial state per unknown state");
  const Eigen::Index d = model.dim();
  const CMatrix mixed = CMatrix::Identity(d, d) / static_cast<double>(d);
  const auto engineered = model.engineered_povm(q.matrix());

  StateFit fit;
  fit.converged = true;
  for (std::size_t j = 0; j < initial.size(); ++j) {
    const auto terms = detail::state_terms(h[j + 1], engineered, q.outcomes());
    CMatrix sigma = initial[j].matrix();
    detail::StateEval cur = detail::evaluate_state(terms, sigma);
    auto guard = [&](CMatrix& s, detail::StateEval& e) {
      for (int tries = 0; tries < 60 && (e.probs.size() > 0 && e.probs.minCoeff() < 1e-12); ++tries) {
        s = (1.0 - 1e-9) * s + 1e-9 * mixed;
        e = detail::evaluate_state(terms, s);
        ++fit.degenerate_mixes;
      }
    };
    guard(sigma, cur);
    if (terms.weights.empty()) {
      fit.sigmas.push_back(DensityMatrix::from_numerical(sigma));
      fit.s_per_state.push_back(0.0);
      continue;
    }
    double gap = 0.0;
    bool done = false;
    int it = 0;
    for (;; ++it) {
      const CMatrix r = detail::r_operator(terms, cur, d);
      gap = max_eigenvalue(r) - terms.total;
      if (log) {
        log->objective.push_back(cur.loglike);
        log->bound.push_back(gap);
      }
      if (gap <= opts.t_sigma) {
        done = true;
        break;
      }
      if (it >= opts.max_rrr_iterations) break;

      CMatrix next = detail::normalized(r * sigma * r);
      detail::StateEval next_eval = detail::evaluate_state(terms, next);
      // a rounding-level decrease is not a real one
      const double noise = -1e-13 * std::max(1.0, std::abs(cur.loglike));
      if (!(detail::state_log_ratio(terms, next_eval, cur) >= noise)) {
        const CMatrix rn = r / terms.total;
        const CMatrix id = CMatrix::Identity(d, d);
        bool accepted = false;
        for (double e = 1.0; e > 1e-12; e *= 0.5) {
          const CMatrix m = id + e * rn;
          next = detail::normalized(m * sigma * m);
          next_eval = detail::evaluate_state(terms, next);
          if (detail::state_log_ratio(terms, next_eval, cur) >= noise) {
            accepted = true;
            break;
          }
        }
        ++fit.diluted_steps;
        if (!accepted) break;  // stalled at working precision
      }
      sigma = std::move(next);
      cur = std::move(next_eval);
      guard(sigma, cur);
    }
    fit.iterations += it;
    fit.converged = fit.converged && done;
    fit.s_per_state.push_back(gap);
    fit.sigmas.push_back(DensityMatrix::from_numerical(sigma));
  }
  fit.s_sigma = fit.s_per_state.empty() ? 0.0 : *std::max_element(fit.s_per_state.begin(), fit.s_per_state.end());
  return fit;
}

// ---------------------------------------------------------------------------
// transition subproblem

/// L2(Q) = sum_{j,i,c} H ln (P_j Q)_{i,c} with P_j(i, k) = Tr(U_i^dagger Pi_k U_i tau_j).
inline double transition_objective(const Histograms& h, const std::vector<RMatrix>& pops, const RMatrix& q) {
  double total = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double part = detail::weighted_log(h[j], pops[j] * q);
    if (part == detail::kNegInf) return detail::kNegInf;
    total += part;
  }
  return total;
}

/// dL2/dQ_{k,c} = sum_{j,i} H_{i,c} P_j(i,k) / (P_j Q)_{i,c}.
inline RMatrix transition_gradient(const Histograms& h, const std::vector<RMatrix>& pops, const RMatrix& q) {
  RMatrix g = RMatrix::Zero(q.rows(), q.cols());
  for (std::size_t j = 0; j < h.size(); ++j) {
    const RMatrix p = pops[j] * q;
    RMatrix ratio = RMatrix::Zero(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index c = 0; c < p.cols(); ++c)
        if (h[j](i, c) > 0.0) ratio(i, c) = h[j](i, c) / p(i, c);
    g.noalias() += pops[j].transpose() * ratio;
  }
  return g;
}

/// Concavity bound on L2(Q_ML) - L2(Q): max over row-stochastic X of
/// <grad, X - Q> = sum_k max_c g_{k,c} - sum_{k,c} Q_{k,c} g_{k,c}.
inline double stop_bound_q(const RMatrix& q, const RMatrix& grad) {
  if (q.rows() != grad.rows() || q.cols() != grad.cols()) throw DimensionError("stop_bound_q: shape mismatch");
  if (!grad.allFinite()) throw std::invalid_argument("stop_bound_q: gradient must be finite");
  return grad.rowwise().maxCoeff().sum() - q.cwiseProduct(grad).sum();
}

struct TransitionFit {
  TransitionMatrix q;
  double s_q = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline std::vector<RMatrix> population_tensor(const MeasurementModel& model, const std::vector<CMatrix>& taus) {
  std::vector<RMatrix> pops;
  pops.reserve(taus.size());
  for (const auto& t : taus) pops.push_back(model.populations(t));
  return pops;
}

/// Spectral projected-gradient ascent on L2 over row-stochastic Q (Euclidean
/// projection per row, Armijo backtracking, Barzilai-Borwein step lengths).
/// Stops once stop_bound_q <= t_q.
inline TransitionFit maximize_transition(const Histograms& h, const std::vector<RMatrix>& pops,
                                         const TransitionMatrix& q0, const SolverOptions& opts,
                                         IterationLog* log = nullptr) {
  if (pops.size() != h.size()) throw DimensionError("maximize_transition: one population matrix per family");
  RMatrix q = q0.matrix();
  std::vector<RMatrix> prob(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) prob[j] = pops[j] * q;
  double value = transition_objective(h, pops, q);
  if (value == detail::kNegInf) throw std::invalid_argument("maximize_transition: initial Q has zero likelihood");
  RMatrix g = transition_gradient(h, pops, q);
  const double gmax = g.cwiseAbs().maxCoeff();
  double alpha = gmax > 0.0 ? 1.0 / gmax : 1.0;

  TransitionFit fit{q0, 0.0, 0, false};
  int it = 0;
  double bound = stop_bound_q(q, g);
  for (;; ++it) {
    bound = stop_bound_q(q, g);
    if (log) {
      log->objective.push_back(value);
      log->bound.push_back(bound);
    }
    if (bound <= opts.t_q) {
      fit.converged = true;
      break;
    }
    if (it >= opts.max_q_iterations) break;

    RMatrix target = q + alpha * g;
    for (Eigen::Index k = 0; k < q.rows(); ++k) target.row(k) = detail::project_simplex(target.row(k));
    const RMatrix dir = target - q;
    const double slope = g.cwiseProduct(dir).sum();
    if (!(slope > 0.0) || dir.cwiseAbs().maxCoeff() < 1e-16) {
      // projected step vanished: first-order stationary up to rounding
      alpha = alpha * 10.0;
      if (alpha > 1e20) break;
      continue;
    }
    double step = 1.0;
    bool accepted = false;
    RMatrix q_next;
    std::vector<RMatrix> prob_next(h.size());
    double gain = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      q_next = q + step * dir;
      gain = 0.0;
      for (std::size_t j = 0; j < h.size() && gain != detail::kNegInf; ++j) {
        prob_next[j] = pops[j] * q_next;
        const double part = detail::weighted_log_ratio(h[j], prob_next[j], prob[j]);
        gain = part == detail::kNegInf ? detail::kNegInf : gain + part;
      }
      if (gain != detail::kNegInf && gain >= 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent at working precision

    RMatrix g_next = transition_gradient(h, pops, q_next);
    const RMatrix s = q_next - q;
    const double sy = -s.cwiseProduct(g_next - g).sum();
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-20, 1e20) : std::min(alpha * 10.0, 1e20);
    q = std::move(q_next);
    prob = std::move(prob_next);
    g = std::move(g_next);
    value += gain;
  }
  fit.iterations = it;
  fit.s_q = bound;
  fit.q = TransitionMatrix::clipped(q);
  return fit;
}

inline TransitionFit maximize_transition(const Histograms& h, const std::vector<DensityMatrix>& sigma_hats,
                                         const TransitionMatrix& q0, const MeasurementModel& model,
                                         const SolverOptions& opts, IterationLog* log = nullptr) {
  detail::check_histograms(h, model, q0.outcomes());
  return maximize_transition(h, population_tensor(model, detail::taus_of(model, sigma_hats)), q0, opts, log);
}

// ---------------------------------------------------------------------------
// alternation

namespace detail {

inline Estimate alternate_once(const Histograms& h, const MeasurementModel& model, TransitionMatrix q,
                               const SolverOptions& opts) {
  const std::size_t s = h.size() - 1;
  std::vector<DensityMatrix> sigmas(s, DensityMatrix::maximally_mixed(model.dim()));
  double ll = log_likelihood(h, sigmas, q, model);
  if (ll == kNegInf) {
    const double eps = 1e-6;
    RMatrix mixed = (1.0 - eps) * q.matrix();
    mixed.array() += eps / static_cast<double>(q.outcomes());
    q = TransitionMatrix::clipped(std::move(mixed));
    ll = log_likelihood(h, sigmas, q, model);
    if (ll == kNegInf) throw std::invalid_argument("alternate: initial transition matrix has zero likelihood");
  }

  Estimate est;
  est.trace.push_back(ll);
  for (int outer = 1; outer <= opts.max_outer_iterations; ++outer) {
    auto sf = rrr_maximize_states(h, q, model, sigmas, opts);
    sigmas = std::move(sf.sigmas);
    est.trace.push_back(log_likelihood(h, sigmas, q, model));

    auto tf = maximize_transition(h, sigmas, q, model, opts);
    q = std::move(tf.q);
    est.trace.push_back(log_likelihood(h, sigmas, q, model));

    const auto gaps = state_gap_bounds(h, sigmas, q, model);
    est.s_sigma = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
    est.s_q = tf.s_q;
    est.iterations = outer;
    if (est.s_sigma <= opts.t_sigma && est.s_q <= opts.t_q) {
      est.converged = true;
      break;
    }
  }
  est.sigma_hats = std::move(sigmas);
  est.q_hat = std::move(q);
  est.loglike = est.trace.back();
  return est;
}

}  // namespace detail

/// Alternates [R rho R over the states; projected gradient over Q] until both
/// gap bounds are below their thresholds. States start at 1/d, Q at q_init.
/// With opts.multi_start > 0 further fits start from q_init mixed 10% with
/// random row-stochastic matrices and the highest-likelihood fit is returned.
inline Estimate alternate(const Histograms& h, const MeasurementModel& model, const TransitionMatrix& q_init,
                          const SolverOptions& opts) {
  opts.validate();
  detail::check_histograms(h, model, q_init.outcomes());
  Estimate best = detail::alternate_once(h, model, q_init, opts);
  for (int start = 0; start < opts.multi_start; ++start) {
    Rng rng(derive_seed(opts.multi_start_seed, {seed_stage::kMultiStart, static_cast<std::uint64_t>(start)}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    RMatrix noise(q_init.subspaces(), q_init.outcomes());
    for (Eigen::Index k = 0; k < noise.rows(); ++k) {
      for (Eigen::Index c = 0; c < noise.cols(); ++c) noise(k, c) = unif(rng);
      noise.row(k) /= noise.row(k).sum();
    }
    auto candidate =
        detail::alternate_once(h, model, TransitionMatrix::clipped(0.9 * q_init.matrix() + 0.1 * noise), opts);
    if (candidate.loglike > best.loglike) best = std::move(candidate);
  }
  return best;
}

}  // namespace qtomo
