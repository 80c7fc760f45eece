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

// Log-det barrier method for small linear matrix inequality programs
//
//   minimize    c^T x
//   subject to  A(x) = A_0 + sum_m x_m A_m  positive definite,
//
// with Hermitian A_m. Used by the expectation-value bounds; not a general
// SDP interface.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qtomo/qcore.hpp"

namespace qtomo::lmi {

struct Problem {
  CMatrix offset;
  std::vector<CMatrix> directions;
  RVector cost;

  CMatrix at(const RVector& x) const {
    CMatrix a = offset;
    for (std::size_t m = 0; m < directions.size(); ++m) a += x(static_cast<Eigen::Index>(m)) * directions[m];
    return a;
  }
};

struct Options {
  double gap_tolerance = 1e-8;  // stop once d / t falls below this
  double t_initial = 1.0;
  double t_factor = 10.0;
  double newton_tolerance = 1e-10;  // half squared Newton decrement
  int max_newton_steps = 500;       // per centering
};

struct Result {
  RVector x;
  double value = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::infinity();
  int newton_steps = 0;
  bool converged = false;
};

namespace detail {

/// Cholesky of the Hermitian part; false when not positive definite.
inline bool positive_definite(const CMatrix& a, Eigen::LLT<CMatrix>& llt) {
  llt.compute(hermitian_part(a));
  return llt.info() == Eigen::Success;
}

inline double log_det(const Eigen::LLT<CMatrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

}  // namespace detail

/// x0 must be strictly feasible.
inline Result minimize(const Problem& p, const RVector& x0, const Options& opts = {}) {
  const auto nvar = static_cast<Eigen::Index>(p.directions.size());
  if (p.cost.size() != nvar || x0.size() != nvar) throw DimensionError("lmi::minimize: variable count mismatch");
  const double d = static_cast<double>(p.offset.rows());
  Result res;
  res.x = x0;
  Eigen::LLT<CMatrix> llt;
  if (!detail::positive_definite(p.at(x0), llt)) throw std::invalid_argument("lmi::minimize: start is not strictly feasible");
  if (nvar == 0) {
    res.value = 0.0;
    res.gap = 0.0;
    res.converged = true;
    return res;
  }

  RVector x = x0;
  double t = opts.t_initial;
  for (;;) {
    // centering
    bool centered = false;
    double previous_decrement = std::numeric_limits<double>::infinity();
    for (int step = 0; step < opts.max_newton_steps; ++step) {
      detail::positive_definite(p.at(x), llt);
      std::vector<CMatrix> scaled(static_cast<std::size_t>(nvar));  // A^{-1} A_m
      RVector grad(nvar);
      for (Eigen::Index m = 0; m < nvar; ++m) {
        scaled[static_cast<std::size_t>(m)] = llt.solve(p.directions[static_cast<std::size_t>(m)]);
        grad(m) = t * p.cost(m) - scaled[static_cast<std::size_t>(m)].trace().real();
      }
      RMatrix hess(nvar, nvar);
      for (Eigen::Index m = 0; m < nvar; ++m) {
        for (Eigen::Index n = m; n < nvar; ++n) {
          // Tr(A^-1 A_m A^-1 A_n)
          const double v = trace_product(scaled[static_cast<std::size_t>(m)], scaled[static_cast<std::size_t>(n)]);
          hess(m, n) = v;
          hess(n, m) = v;
        }
      }
      const RVector dx = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(dx);
      ++res.newton_steps;
      if (!std::isfinite(decrement)) break;
      if (decrement / 2.0 <= opts.newton_tolerance) {
        centered = true;
        break;
      }
      // stalled at rounding level: accept as centered
      if (decrement < 1e-6 && decrement >= 0.5 * previous_decrement) {
        centered = true;
        break;
      }
      previous_decrement = decrement;
      // barrier differences are formed directly so that large t does not swamp them
      const double ld0 = detail::log_det(llt);
      const double slope = t * p.cost.dot(dx);
      double s = 1.0;
      bool moved = false;
      Eigen::LLT<CMatrix> trial_llt;
      for (int bt = 0; bt < 80; ++bt) {
        const RVector trial = x + s * dx;
        if (trial == x) break;  // step below working precision
        if (!detail::positive_definite(p.at(trial), trial_llt)) {
          s *= 0.5;
          continue;
        }
        const double change = s * slope - (detail::log_det(trial_llt) - ld0);
        if (change <= -0.25 * s * decrement) {
          x = trial;
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) {
        // at working precision the decrement cannot be realized any further
        centered = decrement < 1e-6;
        break;
      }
    }
    res.x = x;
    res.value = p.cost.dot(x);
    res.gap = d / t;
    if (!centered) return res;
    if (res.gap <= opts.gap_tolerance) {
      res.converged = true;
      return res;
    }
    t *= opts.t_factor;
  }
}

}  // namespace qtomo::lmi
