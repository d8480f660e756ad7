#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "contractive/errors.hpp"

namespace contractive {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Rightmost eigenpair of a symmetric matrix.
struct EigenPair {
  double value = 0.0;
  Vector vector;
  /// λ₁ − λ₂; +inf for 1×1 matrices.
  double gap = std::numeric_limits<double>::infinity();
  bool near_multiple = false;
};

/// Range [m_lower, m_upper] of the activation derivative σ'.
struct ActivationRange {
  double m_lower = 0.0;
  double m_upper = 1.0;

  double normalized_floor() const { return m_lower / m_upper; }
  double scale() const { return m_upper; }
};

/// A problem rescaled onto Ω_m = {D diagonal : m ≤ D_ii ≤ 1}.
struct NormalizedProblem {
  Matrix matrix;
  double floor = 0.0;
  /// Multiply logarithmic norms computed on Ω_m by this to get the original scale.
  double scale = 1.0;
};

inline void require_square(const Matrix& a, const char* where) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    throw std::invalid_argument(std::string(where) + ": matrix must be square with n >= 1");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(where) + ": matrix has non-finite entries");
  }
}

/// Sym(B) = (B + Bᵀ)/2 with mirrored entries bit-identical.
inline Matrix symmetrize(const Matrix& b) {
  const Index n = b.rows();
  Matrix s(n, n);
  for (Index j = 0; j < n; ++j) {
    s(j, j) = b(j, j);
    for (Index i = j + 1; i < n; ++i) {
      const double v = 0.5 * (b(i, j) + b(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

/// Threshold on λ₁ − λ₂ below which the rightmost eigenvalue is treated as near-multiple.
inline double gap_warn_threshold(const Matrix& s) { return 1e-8 * (1.0 + s.norm()); }

/// Algebraically largest eigenvalue of a symmetric matrix and a unit eigenvector whose
/// first nonzero component is positive.
inline EigenPair rightmost_eigenpair(const Matrix& s) {
  const Index n = s.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    double residual = std::numeric_limits<double>::infinity();
    if (solver.eigenvectors().allFinite()) {
      const Vector v = solver.eigenvectors().col(n - 1);
      residual = (s * v - solver.eigenvalues()(n - 1) * v).norm();
    }
    throw SolverError("core-linalg/rightmost_eigenpair",
                      "symmetric eigensolver did not converge (best residual " +
                          std::to_string(residual) + ")");
  }
  EigenPair out;
  out.value = solver.eigenvalues()(n - 1);
  out.vector = solver.eigenvectors().col(n - 1);
  out.vector.normalize();
  if (n > 1) out.gap = out.value - solver.eigenvalues()(n - 2);
  out.near_multiple = out.gap <= gap_warn_threshold(s);

  const double zero = 1e-14 * out.vector.cwiseAbs().maxCoeff();
  for (Index i = 0; i < n; ++i) {
    if (std::abs(out.vector(i)) > zero) {
      if (out.vector(i) < 0.0) out.vector = -out.vector;
      break;
    }
  }
  return out;
}

/// Logarithmic 2-norm μ₂(B) = λ_max(Sym(B)).
inline double mu2(const Matrix& b) {
  require_square(b, "core-linalg/mu2");
  return rightmost_eigenpair(symmetrize(b)).value;
}

/// ‖A‖₂ = sqrt(λ_max(AᵀA)).
inline double spectral_norm(const Matrix& a) {
  require_square(a, "core-linalg/spectral_norm");
  const Matrix gram = symmetrize(a.transpose() * a);
  return std::sqrt(std::max(0.0, rightmost_eigenpair(gram).value));
}

inline NormalizedProblem normalize_activation(const ActivationRange& range, const Matrix& a) {
  if (!(range.m_upper > 0.0) || !(range.m_lower >= 0.0) || !(range.m_lower < range.m_upper)) {
    throw std::invalid_argument(
        "core-linalg/normalize_activation: need 0 <= m_lower < m_upper, m_upper > 0");
  }
  require_square(a, "core-linalg/normalize_activation");
  return NormalizedProblem{a, range.normalized_floor(), range.scale()};
}

}  // namespace contractive
