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

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qtomo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a constructed object violates one of its documented invariants
/// (Hermiticity, trace, positivity, unitarity, completeness, ...).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-10;
inline constexpr double kPsd = 1e-10;  // minimum eigenvalue may dip to -kPsd
inline constexpr double kUnitary = 1e-12;
inline constexpr double kCompleteness = 1e-10;
}  // namespace tol

// ---------------------------------------------------------------------------
// small dense helpers

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
  }
  return true;
}

inline double hermiticity_error(const CMatrix& m) { return max_abs(m - m.adjoint()); }

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline RVector hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const CMatrix& m) { return hermitian_eigenvalues(m).minCoeff(); }
inline double max_eigenvalue(const CMatrix& m) { return hermitian_eigenvalues(m).maxCoeff(); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CMatrix ket_projector(const CVector& ket) { return ket * ket.adjoint(); }

/// Tr(A B) for Hermitian A, B. Only the real part is meaningful.
inline double trace_product(const CMatrix& a, const CMatrix& b) {
  // sum_ij A_ij B_ji without forming the product
  return (a.array() * b.transpose().array()).sum().real();
}

inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  return 0.5 * hermitian_eigenvalues(a - b).cwiseAbs().sum();
}

inline void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError(std::string(what) + ": matrix must be square and non-empty");
  }
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

// ---------------------------------------------------------------------------
// quantum objects

/// d x d Hermitian, positive semidefinite, unit-trace matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {
    require_square(m_, "DensityMatrix");
    if (!all_finite(m_)) throw InvariantError("DensityMatrix: non-finite entry");
    if (hermiticity_error(m_) > tol::kHermitian) throw InvariantError("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace().real() - 1.0) > tol::kTrace) throw InvariantError("DensityMatrix: trace != 1");
    if (min_eigenvalue(m_) < -tol::kPsd) throw InvariantError("DensityMatrix: not positive semidefinite");
  }

  static DensityMatrix maximally_mixed(Eigen::Index d) {
    return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  static DensityMatrix pure(const CVector& ket) { return DensityMatrix(ket_projector(ket.normalized())); }

  /// Symmetrizes and renormalizes before validating. For iterates of numerical
  /// procedures that are Hermitian and unit-trace only up to rounding.
  static DensityMatrix from_numerical(const CMatrix& m) {
    CMatrix h = hermitian_part(m);
    h /= h.trace().real();
    return DensityMatrix(std::move(h));
  }

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMatrix m_;
};

class UnitaryOp {
 public:
  UnitaryOp(CMatrix m, std::string label) : m_(std::move(m)), label_(std::move(label)) {
    require_square(m_, "UnitaryOp");
    const auto d = m_.rows();
    if (!all_finite(m_)) throw InvariantError("UnitaryOp: non-finite entry");
    if (max_abs(m_.adjoint() * m_ - CMatrix::Identity(d, d)) > tol::kUnitary) {
      throw InvariantError("UnitaryOp '" + label_ + "': not unitary");
    }
  }

  static UnitaryOp identity(Eigen::Index d, std::string label = "I") {
    return UnitaryOp(CMatrix::Identity(d, d), std::move(label));
  }

  const CMatrix& matrix() const { return m_; }
  const std::string& label() const { return label_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMatrix m_;
  std::string label_;
};

class MeasurementOperator {
 public:
  explicit MeasurementOperator(CMatrix m) : m_(std::move(m)) {
    require_square(m_, "MeasurementOperator");
    if (!all_finite(m_)) throw InvariantError("MeasurementOperator: non-finite entry");
    if (hermiticity_error(m_) > tol::kHermitian) throw InvariantError("MeasurementOperator: not Hermitian");
    if (min_eigenvalue(m_) < -tol::kPsd) throw InvariantError("MeasurementOperator: not positive semidefinite");
  }

  const CMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMatrix m_;
};

/// Ordered list of measurement operators that sum to the identity.
class Povm {
 public:
  explicit Povm(std::vector<MeasurementOperator> elements) : elements_(std::move(elements)) {
    if (elements_.empty()) throw InvariantError("Povm: no elements");
    const auto d = elements_.front().dim();
    CMatrix sum = CMatrix::Zero(d, d);
    for (const auto& e : elements_) {
      require_same_dim(e.dim(), d, "Povm");
      sum += e.matrix();
    }
    if (max_abs(sum - CMatrix::Identity(d, d)) > tol::kCompleteness) {
      throw InvariantError("Povm: elements do not sum to identity");
    }
  }

  const std::vector<MeasurementOperator>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  const MeasurementOperator& operator[](std::size_t i) const { return elements_[i]; }
  Eigen::Index dim() const { return elements_.front().dim(); }

 private:
  std::vector<MeasurementOperator> elements_;
};

class Observable {
 public:
  Observable(CMatrix m, std::string label) : m_(std::move(m)), label_(std::move(label)) {
    require_square(m_, "Observable");
    if (!all_finite(m_)) throw InvariantError("Observable: non-finite entry");
    if (hermiticity_error(m_) > tol::kHermitian) {
      throw InvariantError("Observable '" + label_ + "': not Hermitian");
    }
  }

  const CMatrix& matrix() const { return m_; }
  const std::string& label() const { return label_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMatrix m_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// operations

inline CMatrix pauli_x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline CMatrix pauli_y() {
  CMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

inline CMatrix pauli_z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// U(theta, phi)^{(x) num_qubits} with
/// U(theta, phi) = exp[-i theta/2 (sigma_x cos phi + sigma_y sin phi)]
///               = cos(theta/2) 1 - i sin(theta/2) (n . sigma).
inline UnitaryOp rotation_gate(double theta, double phi, int num_qubits) {
  if (num_qubits < 1) throw std::invalid_argument("rotation_gate: num_qubits must be >= 1");
  const CMatrix generator = std::cos(phi) * pauli_x() + std::sin(phi) * pauli_y();
  const CMatrix single = std::cos(theta / 2) * CMatrix::Identity(2, 2) - Complex(0, std::sin(theta / 2)) * generator;
  CMatrix u = single;
  for (int q = 1; q < num_qubits; ++q) u = kron(u, single);
  std::string label = "U(" + std::to_string(theta) + "," + std::to_string(phi) + ")^" + std::to_string(num_qubits);
  return UnitaryOp(std::move(u), std::move(label));
}

inline DensityMatrix evolve_state(const DensityMatrix& rho, const UnitaryOp& u) {
  require_same_dim(rho.dim(), u.dim(), "evolve_state");
  return DensityMatrix::from_numerical(u.matrix() * rho.matrix() * u.matrix().adjoint());
}

/// U^dagger F U, the Heisenberg-picture operator of F measured after U.
inline CMatrix heisenberg(const CMatrix& f, const CMatrix& u) { return hermitian_part(u.adjoint() * f * u); }

inline Povm heisenberg_povm(const Povm& povm, const UnitaryOp& u) {
  require_same_dim(povm.dim(), u.dim(), "heisenberg_povm");
  std::vector<MeasurementOperator> out;
  out.reserve(povm.size());
  for (const auto& e : povm.elements()) out.emplace_back(heisenberg(e.matrix(), u.matrix()));
  return Povm(std::move(out));
}

/// Born rule Tr(F rho), clamped to [0, 1].
inline double born_probability(const MeasurementOperator& op, const DensityMatrix& rho) {
  require_same_dim(op.dim(), rho.dim(), "born_probability");
  const double p = trace_product(op.matrix(), rho.matrix());
  return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Hermitian <-> real vector, orthonormal under Tr(AB).
//
// Basis order: E_jj (j = 0..d-1); (E_jk + E_kj)/sqrt2 for j < k row-major;
// i(E_jk - E_kj)/sqrt2 for j < k row-major.

inline RVector hermitian_to_vector(const CMatrix& m) {
  require_square(m, "hermitian_to_vector");
  if (hermiticity_error(m) > tol::kHermitian * std::max(1.0, max_abs(m))) {
    throw InvariantError("hermitian_to_vector: input not Hermitian");
  }
  const auto d = m.rows();
  RVector v(d * d);
  Eigen::Index n = 0;
  for (Eigen::Index j = 0; j < d; ++j) v(n++) = m(j, j).real();
  const double s = std::sqrt(2.0);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) v(n++) = s * 0.5 * (m(j, k) + m(k, j)).real();
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) v(n++) = s * 0.5 * (m(j, k) - m(k, j)).imag();
  return v;
}

inline Eigen::Index hermitian_dim_from_length(Eigen::Index len) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(len))));
  if (d * d != len || d == 0) throw DimensionError("vector_to_hermitian: length is not a perfect square");
  return d;
}

inline CMatrix vector_to_hermitian(const RVector& v) {
  const auto d = hermitian_dim_from_length(v.size());
  CMatrix m = CMatrix::Zero(d, d);
  Eigen::Index n = 0;
  for (Eigen::Index j = 0; j < d; ++j) m(j, j) = v(n++);
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) {
      m(j, k) += r * v(n);
      m(k, j) += r * v(n);
      ++n;
    }
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) {
      m(j, k) += Complex(0, r * v(n));
      m(k, j) += Complex(0, -r * v(n));
      ++n;
    }
  return m;
}

}  // namespace qtomo
