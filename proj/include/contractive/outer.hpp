#pragma once

// Outer problem: the smallest floor m* with λ[m*] = −target, by Newton on the costless
// derivative dλ/dm = Σ_{i ∈ I₂} x_i z_i safeguarded by a bisection bracket.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractive/inner.hpp"
#include "contractive/linalg.hpp"

namespace contractive {

struct OuterConfig {
  /// Level to reach: λ[m*] = −target (0 for plain contractivity).
  double target = 0.0;
  double m_tol = 1e-12;
  double phi_tol = 1e-10;
  int max_outer = 60;
  /// Starting floor; defaults to min(m_ub, 1 − 1e-3).
  std::optional<double> m0;
  FlowConfig flow;

  void validate() const {
    if (!(m_tol > 0.0) || !(phi_tol > 0.0)) throw std::invalid_argument("OuterConfig: tolerances must be > 0");
    if (max_outer < 1) throw std::invalid_argument("OuterConfig: max_outer must be >= 1");
    if (m0 && !(*m0 >= 0.0 && *m0 <= 1.0)) throw std::invalid_argument("OuterConfig: m0 must lie in [0, 1]");
    if (!std::isfinite(target)) throw std::invalid_argument("OuterConfig: target must be finite");
    flow.validate();
  }
};

enum class StepKind { kInitial, kNewton, kBisection };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::kInitial: return "initial";
    case StepKind::kNewton: return "newton";
    case StepKind::kBisection: return "bisection";
  }
  return "?";
}

struct TraceRow {
  int k = 0;
  double m = 0.0;
  double phi = 0.0;
  std::optional<double> dphi;
  /// How m_k was produced.
  StepKind kind = StepKind::kInitial;
  /// Bracket after evaluating m_k: λ[lo] + target ≥ 0 ≥ λ[hi] + target.
  double bracket_lo = 0.0;
  double bracket_hi = 1.0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
};

template <class Result>
struct LevelSolve {
  double m_star = 0.0;
  Result extremizer;
  SolveTrace trace;
  bool converged = false;
};

struct PhiDerivative {
  double phi = 0.0;
  /// Absent when no entry sits at the floor.
  std::optional<double> dphi;
};

/// φ[m] = −λ[m] and φ'[m] = −Σ_{i ∈ I₂} x_i z_i.
inline PhiDerivative phi_and_derivative(const Extremizer& e) {
  PhiDerivative out;
  out.phi = -e.lambda;
  if (!e.partition.at_floor.empty()) {
    double s = 0.0;
    for (Index i : e.partition.at_floor) s += e.x(i) * e.z(i);
    out.dphi = -s;
  }
  return out;
}

/// m* ≤ 1 − |μ₂(A) + target| / ‖A‖₂, clamped to [0, 1].
inline double upper_bound_mstar(const Matrix& a, double target = 0.0) {
  require_square(a, "outer-solve/upper_bound_mstar");
  const double mu = mu2(a);
  if (mu + target >= 0.0) {
    throw NotContractive("outer-solve/upper_bound_mstar",
                         "mu2(A) + target = " + std::to_string(mu + target) + " >= 0");
  }
  const double beta = spectral_norm(a);
  const double margin = std::abs(mu + target);
  if (margin >= beta) return 0.0;
  return std::clamp(1.0 - margin / beta, 0.0, 1.0);
}

namespace detail {

struct LevelInfo {
  double lambda = 0.0;
  std::optional<double> dlambda;
  bool converged = true;
};

/// Safeguarded Newton on g(m) = λ[m] + target, which is nonincreasing in m. The bracket
/// starts as [0, 1]: λ[0] ≥ 0 since D = 0 ∈ Ω₀, and λ[1] + target < 0 by precondition.
/// For a negative target with g(0) < 0 the bracket collapses onto m* = 0.
template <class Result, class Evaluate, class Info>
LevelSolve<Result> newton_bisection(Evaluate&& evaluate, Info&& info, double m0,
                                    const OuterConfig& cfg) {
  LevelSolve<Result> out;
  double lo = 0.0;
  double hi = 1.0;
  double m = std::clamp(m0, 0.0, 1.0);
  StepKind kind = StepKind::kInitial;
  std::optional<Result> previous;

  for (int k = 0; k < cfg.max_outer; ++k) {
    Result r = evaluate(m, previous ? &*previous : nullptr);
    const LevelInfo li = info(r);
    const double g = li.lambda + cfg.target;
    if (g > 0.0) {
      lo = std::max(lo, m);
    } else {
      hi = std::min(hi, m);
    }
    out.trace.rows.push_back(TraceRow{
        k, m, -li.lambda, li.dlambda ? std::optional<double>(-*li.dlambda) : std::nullopt, kind, lo, hi});
    out.m_star = m;
    out.extremizer = r;
    if (std::abs(g) <= cfg.phi_tol || hi - lo <= cfg.m_tol) {
      out.converged = li.converged;
      return out;
    }

    std::optional<double> next;
    if (li.dlambda && li.converged && *li.dlambda < 0.0) {
      const double candidate = m - g / *li.dlambda;
      if (candidate > lo && candidate < hi) next = candidate;
    }
    if (next) {
      kind = StepKind::kNewton;
      m = *next;
    } else {
      kind = StepKind::kBisection;
      m = 0.5 * (lo + hi);
    }
    previous = std::move(r);
  }
  out.converged = false;
  return out;
}

}  // namespace detail

/// Warm start for a new floor: entries that sat at the old floor move to the new one.
inline DiagonalIterate rescale_floor(const DiagonalIterate& prev, double m, double eps_active) {
  DiagonalIterate it = prev;
  for (Index i = 0; i < it.size(); ++i)
    if (prev.at_floor(i, eps_active)) it.d(i) = m;
  it.floor = m;
  it.clamp();
  return it;
}

using MStarSolve = LevelSolve<Extremizer>;

inline MStarSolve solve_mstar(const Matrix& a, const OuterConfig& cfg,
                              const std::optional<DiagonalIterate>& warm = std::nullopt) {
  require_square(a, "outer-solve/solve_mstar");
  cfg.validate();
  const double mu = mu2(a);
  if (mu + cfg.target >= 0.0) {
    throw NotContractive("outer-solve/solve_mstar",
                         "mu2(A) + target = " + std::to_string(mu + cfg.target) + " >= 0");
  }
  const double m0 = cfg.m0.value_or(std::min(upper_bound_mstar(a, cfg.target), 1.0 - 1e-3));
  FlowConfig flow = cfg.flow;
  if (!flow.grad_tol) flow.grad_tol = default_grad_tol(a);

  auto evaluate = [&](double m, const Extremizer* prev) {
    std::optional<DiagonalIterate> start;
    if (prev) {
      start = rescale_floor(prev->iterate, m, flow.eps_active);
    } else if (warm) {
      start = rescale_floor(*warm, m, flow.eps_active);
    }
    return minimize_F(a, m, start, flow);
  };
  auto info = [](const Extremizer& e) {
    detail::LevelInfo li;
    li.lambda = e.lambda;
    li.converged = e.converged;
    if (auto pd = phi_and_derivative(e); pd.dphi) li.dlambda = -*pd.dphi;
    return li;
  };
  return detail::newton_bisection<Extremizer>(evaluate, info, m0, cfg);
}

}  // namespace contractive
