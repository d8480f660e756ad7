#pragma once

// Identity shifting: the smallest ℓ with m*(A − ℓδI) ≤ α, found by a linear scan in ℓ.
// Monotonicity of m* in ℓ is observed, not known, so the scan never skips ahead.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractive/errors.hpp"
#include "contractive/outer.hpp"

namespace contractive {

/// ℓ passed ell_max before m* dropped to α.
class NonTerminatingShift : public SolverError {
 public:
  NonTerminatingShift(const std::string& what, long ell, double last_m_star)
      : SolverError("stabilize/shift_to_alpha", what), ell_(ell), last_m_star_(last_m_star) {}

  long ell() const noexcept { return ell_; }
  double last_m_star() const noexcept { return last_m_star_; }

 private:
  long ell_;
  double last_m_star_;
};

struct ShiftStep {
  long ell = 0;
  double m_star = 0.0;
};

struct ShiftResult {
  Matrix shifted;
  long ell = 0;
  double delta = 0.0;
  double m_star = 0.0;
  MStarSolve solve;
  /// m* for every ℓ that was solved, in scan order.
  std::vector<ShiftStep> history;
};

inline Matrix shift_identity(const Matrix& a, long ell, double delta) {
  Matrix out = a;
  out.diagonal().array() -= static_cast<double>(ell) * delta;
  return out;
}

/// δ defaults to 0.05 |μ₂(A)| (or 0.05 if μ₂(A) = 0). Shifts with μ₂ + target ≥ 0 are
/// skipped: m* is undefined there.
inline ShiftResult shift_to_alpha(const Matrix& a, double alpha, std::optional<double> delta,
                                  const OuterConfig& cfg, long ell_max = 10000) {
  require_square(a, "stabilize/shift_to_alpha");
  cfg.validate();
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("stabilize/shift_to_alpha: alpha must lie in (0, 1]");
  const double mu = mu2(a);
  double step = delta.value_or(0.05 * std::abs(mu));
  if (!delta && step == 0.0) step = 0.05;
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("stabilize/shift_to_alpha: delta must be > 0");

  long ell = 0;
  if (mu + cfg.target >= 0.0) ell = static_cast<long>(std::floor((mu + cfg.target) / step)) + 1;
  // floor() can land one short when (μ + c)/δ is an integer up to rounding.
  while (mu2(shift_identity(a, ell, step)) + cfg.target >= 0.0) ++ell;

  ShiftResult out;
  out.delta = step;
  std::optional<DiagonalIterate> warm;
  for (; ell <= ell_max; ++ell) {
    Matrix shifted = shift_identity(a, ell, step);
    MStarSolve s = solve_mstar(shifted, cfg, warm);
    out.history.push_back(ShiftStep{ell, s.m_star});
    warm = s.extremizer.iterate;
    if (s.m_star <= alpha) {
      out.shifted = std::move(shifted);
      out.ell = ell;
      out.m_star = s.m_star;
      out.solve = std::move(s);
      return out;
    }
  }
  const double last = out.history.empty() ? 1.0 : out.history.back().m_star;
  throw NonTerminatingShift("ell exceeded " + std::to_string(ell_max) + " with m* = " + std::to_string(last) +
                                " > alpha = " + std::to_string(alpha),
                            ell_max, last);
}

}  // namespace contractive
