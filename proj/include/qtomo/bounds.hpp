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

// Upper and lower bounds of Tr(O rho) over all states rho that reproduce the
// outcome probabilities of a fitted state sigma_hat:
//
//   min / max  Tr(O rho)  s.t.  rho >= 0,  Tr rho = 1,  Tr(V_k (rho - sigma_hat)) = 0.
//
// The affine constraints are eliminated by writing rho = rho_start + sum_m x_m B_m
// over an orthonormal basis {B_m} of the traceless directions they leave free;
// what remains is a small LMI solved by lmi::minimize.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qtomo/iontrap.hpp"
#include "qtomo/lmi.hpp"
#include "qtomo/qcore.hpp"

namespace qtomo {

inline constexpr double kRankTolerance = 1e-10;          // relative to the largest singular value
inline constexpr double kIdentifiableTolerance = 1e-6;  // upper - lower

struct ConstraintBasis {
  std::vector<CMatrix> rows;                 // orthonormal under Tr(AB)
  RVector measurement_singular_values;       // of the stacked vectorized F_{i,c}
  RVector projector_singular_values;         // of the stacked vectorized Pi_{i,k}
  std::size_t projector_rank = 0;
  double rank_tolerance = kRankTolerance;

  std::size_t retained_count() const { return rows.size(); }
};

struct BoundsDiagnostics {
  double lower_gap = 0.0;
  double upper_gap = 0.0;
  double max_constraint_residual = 0.0;  // over both optima
  std::size_t free_directions = 0;
  bool face_restricted = false;  // no strictly positive feasible state; searched within the support of sigma_hat
  double interior_margin = 0.0;  // min eigenvalue of the barrier start
  int newton_steps = 0;
};

struct ObservableBounds {
  std::string label;
  double lower = 0.0;
  double upper = 0.0;
  bool identifiable = false;
  bool valid = false;
  BoundsDiagnostics diagnostics;
};

namespace detail {

inline RMatrix stack_vectorized(const std::vector<CMatrix>& ops) {
  if (ops.empty()) return RMatrix(0, 0);
  const auto d = ops.front().rows();
  RMatrix out(static_cast<Eigen::Index>(ops.size()), d * d);
  for (std::size_t n = 0; n < ops.size(); ++n) out.row(static_cast<Eigen::Index>(n)) = hermitian_to_vector(ops[n]).transpose();
  return out;
}

inline Eigen::Index numerical_rank(const RVector& sv, double rel_tol) {
  if (sv.size() == 0) return 0;
  const double smax = sv.maxCoeff();
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > rel_tol * smax) ++r;
  return r;
}

/// Orthonormal Hermitian basis of {X : Tr X = 0, Tr(C_k X) = 0 for all k}.
inline std::vector<CMatrix> free_directions(Eigen::Index d, const std::vector<CMatrix>& constraints) {
  std::vector<CMatrix> all{CMatrix::Identity(d, d)};
  all.insert(all.end(), constraints.begin(), constraints.end());
  const RMatrix a = stack_vectorized(all);
  Eigen::JacobiSVD<RMatrix> svd(a, Eigen::ComputeFullV);
  const Eigen::Index rank = numerical_rank(svd.singularValues(), kRankTolerance);
  std::vector<CMatrix> out;
  for (Eigen::Index m = rank; m < d * d; ++m) out.push_back(vector_to_hermitian(svd.matrixV().col(m)));
  return out;
}

struct ReducedProblem {
  CMatrix start;                    // feasible state, full dimension
  CMatrix embed;                    // d x r isometry (identity unless face restricted)
  std::vector<CMatrix> directions;  // r x r
  bool face_restricted = false;
  double margin = 0.0;
};

inline ReducedProblem feasible_start(const CMatrix& sigma_hat, const std::vector<CMatrix>& constraints,
                                     const std::vector<CMatrix>& directions) {
  const Eigen::Index d = sigma_hat.rows();
  ReducedProblem rp;
  rp.embed = CMatrix::Identity(d, d);
  rp.directions = directions;
  rp.start = sigma_hat;
  rp.margin = min_eigenvalue(sigma_hat);
  if (rp.margin > 1e-9 || directions.empty()) return rp;

  // phase I: maximize s with rho(x) - s 1 positive definite
  lmi::Problem phase1;
  phase1.offset = sigma_hat;
  phase1.directions = directions;
  phase1.directions.push_back(-CMatrix::Identity(d, d));
  phase1.cost = RVector::Zero(static_cast<Eigen::Index>(phase1.directions.size()));
  phase1.cost(phase1.cost.size() - 1) = -1.0;
  RVector x0 = RVector::Zero(phase1.cost.size());
  x0(x0.size() - 1) = rp.margin - 1.0;
  lmi::Options o;
  o.gap_tolerance = 1e-11;
  const auto r1 = lmi::minimize(phase1, x0, o);
  const double best_margin = -r1.value;
  CMatrix rho = sigma_hat;
  for (std::size_t m = 0; m < directions.size(); ++m) rho += r1.x(static_cast<Eigen::Index>(m)) * directions[m];
  rho = hermitian_part(rho);
  if (best_margin > 1e-9) {
    rp.start = rho;
    rp.margin = min_eigenvalue(rho);
    return rp;
  }

  // No strictly positive feasible state. The phase I point sits near the
  // relative interior, so its numerical range is the common support.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < d; ++k)
    if (es.eigenvalues()(k) > 1e-8) keep.push_back(k);
  const auto r = static_cast<Eigen::Index>(keep.size());
  CMatrix w(d, r);
  for (Eigen::Index k = 0; k < r; ++k) w.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]);
  std::vector<CMatrix> reduced_constraints;
  for (const auto& c : constraints) reduced_constraints.push_back(hermitian_part(w.adjoint() * c * w));
  const CMatrix reduced = hermitian_part(w.adjoint() * rho * w);
  rp.embed = w;
  rp.start = w * reduced * w.adjoint();
  rp.directions = free_directions(r, reduced_constraints);
  rp.margin = min_eigenvalue(reduced);
  rp.face_restricted = true;
  return rp;
}

inline ObservableBounds solve_bounds_impl(const Observable& o, const DensityMatrix& sigma_hat,
                                          const std::vector<CMatrix>& constraints) {
  require_same_dim(o.dim(), sigma_hat.dim(), "solve_bounds");
  for (const auto& c : constraints) require_same_dim(c.rows(), sigma_hat.dim(), "solve_bounds constraint");
  const Eigen::Index d = sigma_hat.dim();
  ObservableBounds out;
  out.label = o.label();

  const auto directions = free_directions(d, constraints);
  const auto rp = feasible_start(sigma_hat.matrix(), constraints, directions);
  out.diagnostics.free_directions = rp.directions.size();
  out.diagnostics.face_restricted = rp.face_restricted;
  out.diagnostics.interior_margin = rp.margin;

  const CMatrix reduced_o = hermitian_part(rp.embed.adjoint() * o.matrix() * rp.embed);
  const CMatrix reduced_start = hermitian_part(rp.embed.adjoint() * rp.start * rp.embed);
  const double base = trace_product(o.matrix(), rp.start);
  lmi::Problem prob;
  prob.offset = reduced_start;
  prob.directions = rp.directions;
  prob.cost.resize(static_cast<Eigen::Index>(rp.directions.size()));
  for (std::size_t m = 0; m < rp.directions.size(); ++m) {
    prob.cost(static_cast<Eigen::Index>(m)) = trace_product(reduced_o, rp.directions[m]);
  }
  const RVector x0 = RVector::Zero(prob.cost.size());

  auto residual = [&](const RVector& x) {
    CMatrix rho = rp.embed * prob.at(x) * rp.embed.adjoint();
    double worst = std::abs(rho.trace().real() - 1.0);
    for (const auto& c : constraints) worst = std::max(worst, std::abs(trace_product(c, rho - sigma_hat.matrix())));
    return worst;
  };

  const auto lo = lmi::minimize(prob, x0);
  lmi::Problem neg = prob;
  neg.cost = -prob.cost;
  const auto hi = lmi::minimize(neg, x0);

  out.lower = base + lo.value;
  out.upper = base - hi.value;
  out.diagnostics.lower_gap = lo.gap;
  out.diagnostics.upper_gap = hi.gap;
  out.diagnostics.newton_steps = lo.newton_steps + hi.newton_steps;
  out.diagnostics.max_constraint_residual = std::max(residual(lo.x), residual(hi.x));
  out.valid = lo.converged && hi.converged;
  out.identifiable = out.upper - out.lower <= kIdentifiableTolerance;
  return out;
}

}  // namespace detail

/// SVD-reduced constraint set: the rows of V^dagger for the largest singular
/// values of the stacked vectorized F_{i,c}, keeping as many as the numerical
/// rank of the stacked vectorized Pi_{i,k}.
inline ConstraintBasis build_constraint_basis(const TransitionMatrix& q, const MeasurementModel& model) {
  const Eigen::Index d = model.dim();
  const auto f_ops = model.engineered_povm(q.matrix());
  std::vector<CMatrix> pi_ops;
  for (std::size_t i = 0; i < model.num_unitaries(); ++i)
    for (std::size_t k = 0; k < model.num_subspaces(); ++k) pi_ops.push_back(model.engineered_projector(i, k));

  ConstraintBasis basis;
  Eigen::JacobiSVD<RMatrix> pi_svd(detail::stack_vectorized(pi_ops));
  basis.projector_singular_values = pi_svd.singularValues();
  basis.projector_rank = static_cast<std::size_t>(detail::numerical_rank(basis.projector_singular_values, kRankTolerance));

  Eigen::JacobiSVD<RMatrix> f_svd(detail::stack_vectorized(f_ops), Eigen::ComputeFullV);
  basis.measurement_singular_values = f_svd.singularValues();
  const auto keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(basis.projector_rank), d * d);
  for (Eigen::Index k = 0; k < keep; ++k) basis.rows.push_back(vector_to_hermitian(f_svd.matrixV().col(k)));
  return basis;
}

inline ObservableBounds solve_bounds(const Observable& o, const DensityMatrix& sigma_hat, const ConstraintBasis& basis) {
  return detail::solve_bounds_impl(o, sigma_hat, basis.rows);
}

/// Same program with an arbitrary constraint list, e.g. every F_{i,c} unreduced.
inline ObservableBounds solve_bounds(const Observable& o, const DensityMatrix& sigma_hat,
                                     const std::vector<CMatrix>& constraints) {
  return detail::solve_bounds_impl(o, sigma_hat, constraints);
}

/// Norm of the component of O outside span(basis rows).
inline double span_residual(const Observable& o, const ConstraintBasis& basis) {
  RVector v = hermitian_to_vector(o.matrix());
  for (const auto& row : basis.rows) {
    const RVector r = hermitian_to_vector(row);
    v -= r.dot(v) * r;
  }
  return v.norm();
}

/// sum_k <O, V_k> Tr(V_k sigma): the expectation through the measured directions only.
inline double linear_combination_value(const Observable& o, const DensityMatrix& sigma_hat,
                                       const ConstraintBasis& basis) {
  double total = 0.0;
  for (const auto& row : basis.rows) total += trace_product(o.matrix(), row) * trace_product(row, sigma_hat.matrix());
  return total;
}

/// |Phi+><Phi+| with |Phi+> = (|up up> + |down down>)/sqrt2.
inline Observable bell_observable() { return Observable(ket_projector(two_ion::phi_plus()), "bell"); }

/// |down up><down up|: second ion bright.
inline Observable second_ion_bright_observable() {
  return Observable(ket_projector(two_ion::down_up()), "second-ion-bright");
}

}  // namespace qtomo
