#pragma once

// Projected Euler integration of the constrained gradient system on the box [m, 1]^N.
//
// The objective supplies the rightmost eigenvalue λ of some symmetric matrix that depends
// on the diagonal entries d, together with ∂λ/∂d. The flow ascends λ (descends F = −λ)
// with the adaptive step rule: reject while F does not strictly decrease, dividing the
// step by θ; grow by θ after a step accepted without rejection.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "contractive/linalg.hpp"

namespace contractive {

struct FlowConfig {
  double h0 = 0.1;
  double theta = 2.0;
  /// Stationarity tolerance on the projected direction; defaults to 1e-9 (1 + ‖A‖₂).
  std::optional<double> grad_tol;
  double h_min = 1e-14;
  long max_steps = 100000;
  double eps_active = 1e-10;
  double tol_interior = 1e-6;
  /// Extra flows from binary patterns; defaults to min(2^N − 1, 8).
  std::optional<int> restarts;
  std::uint64_t seed = 0x5eedc0ffeeULL;
  /// After the multi-start, flip single bound entries of the best point and re-run the
  /// flow from any flip that raises λ; repeats until no flip helps.
  bool vertex_polish = true;
  bool record_trace = false;

  void validate() const {
    if (!(theta > 1.0)) throw std::invalid_argument("FlowConfig: theta must be > 1");
    if (!(h_min > 0.0 && h_min < h0)) throw std::invalid_argument("FlowConfig: need 0 < h_min < h0");
    if (grad_tol && !(*grad_tol > 0.0)) throw std::invalid_argument("FlowConfig: grad_tol must be > 0");
    if (!(eps_active > 0.0) || !(tol_interior > 0.0))
      throw std::invalid_argument("FlowConfig: tolerances must be > 0");
    if (max_steps < 1) throw std::invalid_argument("FlowConfig: max_steps must be >= 1");
    if (restarts && *restarts < 0) throw std::invalid_argument("FlowConfig: restarts must be >= 0");
  }
};

/// Diagonal of D ∈ Ω_m, stored as a vector, with its floor m.
struct DiagonalIterate {
  Vector d;
  double floor = 0.0;

  static DiagonalIterate identity(Index n, double floor) {
    return DiagonalIterate{Vector::Ones(n), floor};
  }

  Index size() const { return d.size(); }
  bool at_floor(Index i, double eps) const { return d(i) <= floor + eps; }
  bool at_ceiling(Index i, double eps) const { return d(i) >= 1.0 - eps; }

  std::vector<Index> active_low(double eps) const {
    std::vector<Index> out;
    for (Index i = 0; i < size(); ++i)
      if (at_floor(i, eps)) out.push_back(i);
    return out;
  }
  std::vector<Index> active_high(double eps) const {
    std::vector<Index> out;
    for (Index i = 0; i < size(); ++i)
      if (at_ceiling(i, eps)) out.push_back(i);
    return out;
  }

  void clamp() { d = d.cwiseMax(floor).cwiseMin(1.0); }

  void validate(const char* where) const {
    if (!(floor >= 0.0 && floor <= 1.0))
      throw std::invalid_argument(std::string(where) + ": floor must lie in [0, 1]");
    for (Index i = 0; i < size(); ++i) {
      if (!(d(i) >= floor && d(i) <= 1.0))
        throw std::invalid_argument(std::string(where) + ": diagonal entry outside [m, 1]");
    }
  }
};

/// λ with its eigenpair and ascent direction ∂λ/∂d.
struct Evaluation {
  double lambda = 0.0;
  EigenPair eig;
  Vector ascent;
};

template <class T>
concept FlowObjective = requires(const T& obj, const Vector& d) {
  { obj.evaluate(d) } -> std::convertible_to<Evaluation>;
  { obj.size() } -> std::convertible_to<Index>;
};

/// Zeroes components that would leave the box: negative ones at the floor, positive ones
/// at the ceiling.
inline Vector project_direction(const DiagonalIterate& it, const Vector& v, double eps_active) {
  Vector out = v;
  for (Index i = 0; i < v.size(); ++i) {
    if (it.at_floor(i, eps_active)) out(i) = std::max(0.0, out(i));
    if (it.at_ceiling(i, eps_active)) out(i) = std::min(0.0, out(i));
  }
  return out;
}

struct FlowTraceRow {
  long step = 0;
  double F = 0.0;
  double h = 0.0;
  std::vector<Index> active_low;
  std::vector<Index> active_high;
};

struct StepOutcome {
  /// False means no decrease was found above h_min (a stationary point).
  bool accepted = false;
  DiagonalIterate iterate;
  Evaluation eval;
  double h_used = 0.0;
  double h_next = 0.0;
  int rejections = 0;
};

template <FlowObjective Obj>
StepOutcome euler_step(const Obj& obj, const DiagonalIterate& it, const Evaluation& current,
                       double h_proposed, const FlowConfig& cfg) {
  StepOutcome out;
  out.iterate = it;
  out.eval = current;
  const Vector dir = project_direction(it, current.ascent, cfg.eps_active);
  const double dir_max = dir.cwiseAbs().maxCoeff();
  if (dir_max == 0.0) return out;

  const double f_current = -current.lambda;
  // Moves longer than the box width only clamp, so cap the trial step there.
  double h = std::min(h_proposed, 1.0 / dir_max);
  bool rejected = false;
  while (h >= cfg.h_min) {
    DiagonalIterate cand{it.d + h * dir, it.floor};
    cand.clamp();
    Evaluation e = obj.evaluate(cand.d);
    if (-e.lambda < f_current) {
      out.accepted = true;
      out.iterate = std::move(cand);
      out.eval = std::move(e);
      out.h_used = h;
      out.h_next = rejected ? h : cfg.theta * h;
      return out;
    }
    h /= cfg.theta;
    rejected = true;
    ++out.rejections;
  }
  return out;
}

struct FlowRun {
  DiagonalIterate iterate;
  Evaluation eval;
  long steps = 0;
  bool converged = false;
  bool jittered = false;
  /// Some accepted iterate had a near-multiple rightmost eigenvalue.
  bool near_multiple_seen = false;
  std::vector<FlowTraceRow> trace;
};

template <FlowObjective Obj>
FlowRun run_flow(const Obj& obj, DiagonalIterate start, const FlowConfig& cfg, double grad_tol) {
  FlowRun run;
  run.iterate = std::move(start);
  run.iterate.clamp();
  run.eval = obj.evaluate(run.iterate.d);
  run.near_multiple_seen = run.eval.eig.near_multiple;
  double h = cfg.h0;

  auto record = [&](double h_used) {
    if (!cfg.record_trace) return;
    run.trace.push_back(FlowTraceRow{run.steps, -run.eval.lambda, h_used,
                                     run.iterate.active_low(cfg.eps_active),
                                     run.iterate.active_high(cfg.eps_active)});
  };
  record(0.0);

  while (run.steps < cfg.max_steps) {
    const Vector dir = project_direction(run.iterate, run.eval.ascent, cfg.eps_active);
    if (dir.norm() <= grad_tol) {
      run.converged = true;
      return run;
    }
    StepOutcome step = euler_step(obj, run.iterate, run.eval, std::max(h, cfg.h_min), cfg);
    if (!step.accepted) {
      if (run.eval.eig.near_multiple && !run.jittered) {
        // One-time symmetry-breaking jitter off a coalescence.
        run.jittered = true;
        for (Index i = 0; i < run.iterate.size(); ++i)
          run.iterate.d(i) += (i % 2 == 0 ? 1e-10 : -1e-10);
        run.iterate.clamp();
        run.eval = obj.evaluate(run.iterate.d);
        h = cfg.h0;
        continue;
      }
      run.converged = true;
      return run;
    }
    run.iterate = std::move(step.iterate);
    run.eval = std::move(step.eval);
    run.near_multiple_seen = run.near_multiple_seen || run.eval.eig.near_multiple;
    h = step.h_next;
    ++run.steps;
    record(step.h_used);
  }
  return run;
}

namespace detail {

inline bool lex_less(const Vector& a, const Vector& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (b(i) < a(i)) return false;
  }
  return false;
}

/// Binary start patterns for the extra flows: all non-identity patterns when there are few
/// enough, otherwise distinct random ones.
inline std::vector<Vector> restart_patterns(Index size, double floor, int count,
                                            std::uint64_t seed) {
  std::vector<Vector> out;
  if (count <= 0) return out;
  const bool exhaustive = size < 31 && (std::int64_t{1} << size) - 1 <= count;
  if (exhaustive) {
    const std::int64_t total = std::int64_t{1} << size;
    for (std::int64_t mask = 0; mask < total - 1; ++mask) {
      Vector d(size);
      for (Index i = 0; i < size; ++i) d(i) = ((mask >> i) & 1) ? 1.0 : floor;
      out.push_back(std::move(d));
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<bool>> seen;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts < 64 * count) {
    ++attempts;
    std::vector<bool> bits(static_cast<std::size_t>(size));
    bool all_ones = true;
    for (auto&& b : bits) {
      b = coin(rng);
      all_ones = all_ones && b;
    }
    if (all_ones || std::find(seen.begin(), seen.end(), bits) != seen.end()) continue;
    seen.push_back(bits);
    Vector d(size);
    for (Index i = 0; i < size; ++i) d(i) = bits[static_cast<std::size_t>(i)] ? 1.0 : floor;
    out.push_back(std::move(d));
  }
  return out;
}

/// Index of the run with the largest λ (ties: lexicographically smallest d).
inline std::size_t best_run(const std::vector<FlowRun>& runs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k) {
    const double a = runs[k].eval.lambda, b = runs[best].eval.lambda;
    if (a > b || (a == b && lex_less(runs[k].iterate.d, runs[best].iterate.d))) best = k;
  }
  return best;
}

/// Sign conditions are first order only; a single entry jumping to its other bound can
/// still raise λ. Such a jump restarts the flow, which then climbs further.
template <FlowObjective Obj>
void polish_vertices(const Obj& obj, std::vector<FlowRun>& runs, const FlowConfig& cfg, double grad_tol) {
  const Index n = obj.size();
  for (Index round = 0; round < 4 * n; ++round) {
    const FlowRun& best = runs[best_run(runs)];
    const DiagonalIterate& it = best.iterate;
    double top = best.eval.lambda + 1e-12 * (1.0 + std::abs(best.eval.lambda));
    std::optional<Vector> jump;
    for (Index i = 0; i < n; ++i) {
      Vector d = it.d;
      if (it.at_floor(i, cfg.eps_active)) {
        d(i) = 1.0;
      } else if (it.at_ceiling(i, cfg.eps_active)) {
        d(i) = it.floor;
      } else {
        continue;
      }
      const double l = obj.evaluate(d).lambda;
      if (l > top) {
        top = l;
        jump = std::move(d);
      }
    }
    if (!jump) return;
    const double floor = it.floor;
    runs.push_back(run_flow(obj, DiagonalIterate{std::move(*jump), floor}, cfg, grad_tol));
  }
}

}  // namespace detail

inline int default_restarts(Index size) {
  if (size >= 4) return 8;
  return static_cast<int>((Index{1} << size) - 1);
}

struct MultiStartResult {
  FlowRun best;
  /// Distinct stationary points reached, best first.
  std::vector<FlowRun> located;
};

/// Flow from `start`, then from the restart patterns; keeps the best by (F, lexicographic d).
template <FlowObjective Obj>
MultiStartResult minimize_multistart(const Obj& obj, const DiagonalIterate& start,
                                     const FlowConfig& cfg, double grad_tol) {
  std::vector<FlowRun> runs;
  runs.push_back(run_flow(obj, start, cfg, grad_tol));
  const int count = cfg.restarts.value_or(default_restarts(obj.size()));
  for (Vector& d : detail::restart_patterns(obj.size(), start.floor, count, cfg.seed)) {
    runs.push_back(run_flow(obj, DiagonalIterate{std::move(d), start.floor}, cfg, grad_tol));
  }
  if (cfg.vertex_polish) detail::polish_vertices(obj, runs, cfg, grad_tol);
  std::stable_sort(runs.begin(), runs.end(), [](const FlowRun& a, const FlowRun& b) {
    if (-a.eval.lambda != -b.eval.lambda) return -a.eval.lambda < -b.eval.lambda;
    return detail::lex_less(a.iterate.d, b.iterate.d);
  });
  MultiStartResult out;
  for (FlowRun& r : runs) {
    bool duplicate = false;
    for (const FlowRun& kept : out.located) {
      if ((kept.iterate.d - r.iterate.d).cwiseAbs().maxCoeff() <= 1e-8) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) out.located.push_back(std::move(r));
  }
  out.best = out.located.front();
  return out;
}

}  // namespace contractive
