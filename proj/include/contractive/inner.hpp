#pragma once

// Inner problem: minimize F(D) = −λ_max(Sym(DA)) over D ∈ Ω_m.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "contractive/flow.hpp"
#include "contractive/linalg.hpp"

namespace contractive {

/// Index partition of a diagonal: entries at 1, at the floor m, and strictly between.
/// When m = 1 every entry is reported at the floor.
struct Partition {
  std::vector<Index> at_one;
  std::vector<Index> at_floor;
  std::vector<Index> interior;

  static Partition of(const DiagonalIterate& it, double eps_active) {
    Partition p;
    for (Index i = 0; i < it.size(); ++i) {
      if (it.at_floor(i, eps_active)) {
        p.at_floor.push_back(i);
      } else if (it.at_ceiling(i, eps_active)) {
        p.at_one.push_back(i);
      } else {
        p.interior.push_back(i);
      }
    }
    return p;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct Extremizer {
  DiagonalIterate iterate;
  double lambda = 0.0;
  Vector x;
  Vector z;
  Partition partition;
  /// x_i z_i, the free flow direction.
  Vector stationarity;
  bool converged = true;
  bool near_multiple = false;
  long steps = 0;
  std::vector<FlowTraceRow> trace;
  /// Other stationary points reached by the multi-start, as (diagonal, F).
  std::vector<std::pair<Vector, double>> located;

  double F() const { return -lambda; }
};

/// Rightmost eigenvalue of Sym(diag(d) A) and its gradient x∘z with z = A x.
class SingleLayerObjective {
 public:
  explicit SingleLayerObjective(const Matrix& a) : a_(a) {}

  Index size() const { return a_.rows(); }

  Evaluation evaluate(const Vector& d) const {
    const Matrix da = d.asDiagonal() * a_;
    Evaluation e;
    e.eig = rightmost_eigenpair(symmetrize(da));
    e.lambda = e.eig.value;
    e.ascent = e.eig.vector.cwiseProduct(a_ * e.eig.vector);
    return e;
  }

 private:
  const Matrix& a_;
};

inline void check_dimension(const DiagonalIterate& it, const Matrix& a, const char* where) {
  require_square(a, where);
  if (it.size() != a.rows()) throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

/// F(D) = −λ_max(Sym(DA)) and the eigenpair.
inline std::pair<double, EigenPair> functional_F(const DiagonalIterate& it, const Matrix& a) {
  check_dimension(it, a, "inner-flow/functional_F");
  EigenPair eig = rightmost_eigenpair(symmetrize(it.d.asDiagonal() * a));
  const double f = -eig.value;
  return {f, std::move(eig)};
}

struct FreeGradient {
  /// g_i = −x_i z_i.
  Vector g;
  EigenPair eig;
  Vector z;
};

inline FreeGradient free_gradient(const DiagonalIterate& it, const Matrix& a) {
  check_dimension(it, a, "inner-flow/free_gradient");
  FreeGradient out;
  out.eig = rightmost_eigenpair(symmetrize(it.d.asDiagonal() * a));
  out.z = a * out.eig.vector;
  out.g = -out.eig.vector.cwiseProduct(out.z);
  return out;
}

inline double default_grad_tol(const Matrix& a) { return 1e-9 * (1.0 + spectral_norm(a)); }

/// One step of the single-layer flow; see the generic euler_step.
inline StepOutcome euler_step(const DiagonalIterate& it, const Matrix& a, const Evaluation& current,
                              double h_proposed, const FlowConfig& cfg) {
  check_dimension(it, a, "inner-flow/euler_step");
  return euler_step(SingleLayerObjective(a), it, current, h_proposed, cfg);
}

/// Assembles the extremizer record for a fixed diagonal.
inline Extremizer make_extremizer(const Matrix& a, const DiagonalIterate& it, double eps_active) {
  Extremizer e;
  e.iterate = it;
  const EigenPair eig = rightmost_eigenpair(symmetrize(it.d.asDiagonal() * a));
  e.lambda = eig.value;
  e.x = eig.vector;
  e.z = a * e.x;
  e.stationarity = e.x.cwiseProduct(e.z);
  e.partition = Partition::of(it, eps_active);
  e.near_multiple = eig.near_multiple;
  return e;
}

/// Multi-start constrained gradient flow for min_{D ∈ Ω_m} F(D). Without a start the flow
/// begins at D = I.
inline Extremizer minimize_F(const Matrix& a, double m, const std::optional<DiagonalIterate>& d0,
                             const FlowConfig& cfg) {
  require_square(a, "inner-flow/minimize_F");
  cfg.validate();
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("inner-flow/minimize_F: m must lie in [0, 1]");
  DiagonalIterate start = d0.value_or(DiagonalIterate::identity(a.rows(), m));
  start.floor = m;
  check_dimension(start, a, "inner-flow/minimize_F");
  start.validate("inner-flow/minimize_F");

  const double grad_tol = cfg.grad_tol.value_or(default_grad_tol(a));
  MultiStartResult result = minimize_multistart(SingleLayerObjective(a), start, cfg, grad_tol);

  FlowRun& best = result.best;
  Extremizer e;
  e.iterate = best.iterate;
  e.lambda = best.eval.lambda;
  e.x = best.eval.eig.vector;
  e.z = a * e.x;
  e.stationarity = best.eval.ascent;
  e.partition = Partition::of(best.iterate, cfg.eps_active);
  e.converged = best.converged;
  e.near_multiple = best.near_multiple_seen || best.eval.eig.near_multiple;
  e.steps = best.steps;
  e.trace = std::move(best.trace);
  for (const FlowRun& r : result.located) e.located.emplace_back(r.iterate.d, -r.eval.lambda);
  return e;
}

enum class FirstOrderRule { kAtOne, kAtFloor, kInterior };

struct FirstOrderViolation {
  Index index = 0;
  FirstOrderRule rule = FirstOrderRule::kInterior;
  double xz = 0.0;
};

struct FirstOrderReport {
  std::vector<FirstOrderViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Sign conditions of a local extremizer: x_i z_i ≥ 0 at 1, ≤ 0 at m, = 0 in between.
inline FirstOrderReport check_first_order(const Partition& partition, const Vector& xz, double tol,
                                          double tol_interior) {
  FirstOrderReport r;
  for (Index i : partition.at_one)
    if (!(xz(i) > -tol)) r.violations.push_back({i, FirstOrderRule::kAtOne, xz(i)});
  for (Index i : partition.at_floor)
    if (!(xz(i) < tol)) r.violations.push_back({i, FirstOrderRule::kAtFloor, xz(i)});
  for (Index i : partition.interior)
    if (!(std::abs(xz(i)) <= tol_interior)) r.violations.push_back({i, FirstOrderRule::kInterior, xz(i)});
  return r;
}

inline FirstOrderReport check_first_order(const Extremizer& e, double tol = 1e-9,
                                          double tol_interior = 1e-6) {
  return check_first_order(e.partition, e.stationarity, tol, tol_interior);
}

}  // namespace contractive
