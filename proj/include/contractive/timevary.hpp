#pragma once

// Time-dependent weight matrices A(t): tracking m*(t) along a grid (Euler predictor on
// ṁ* = −γ/ζ, one Newton corrector, restart on structure change) and the worst-case
// amplification bound exp(∫ μ₂(t) dt) for a fixed floor.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contractive/inner.hpp"
#include "contractive/outer.hpp"

namespace contractive {

enum class DerivativeMode { kProvided, kFiniteDifference };

struct MatrixPath {
  std::vector<double> times;
  std::vector<Matrix> samples;
  /// Ȧ(t_k); empty means central finite differences on the grid.
  std::vector<Matrix> derivatives;
  /// Exact A(t) between grid points, if known; otherwise samples are linearly interpolated.
  std::function<Matrix(double)> evaluator;

  DerivativeMode mode() const {
    return derivatives.empty() ? DerivativeMode::kFiniteDifference : DerivativeMode::kProvided;
  }
  std::size_t size() const { return times.size(); }

  void validate(const char* where) const {
    if (times.size() != samples.size() || times.empty())
      throw std::invalid_argument(std::string(where) + ": times and samples must be non-empty and aligned");
    if (!derivatives.empty() && derivatives.size() != samples.size())
      throw std::invalid_argument(std::string(where) + ": one derivative per sample required");
    if (mode() == DerivativeMode::kFiniteDifference && times.size() < 2)
      throw std::invalid_argument(std::string(where) + ": finite differences need at least two samples");
    for (std::size_t k = 0; k < samples.size(); ++k) {
      require_square(samples[k], where);
      if (samples[k].rows() != samples.front().rows())
        throw std::invalid_argument(std::string(where) + ": samples have different dimensions");
      if (!derivatives.empty() && (derivatives[k].rows() != samples[k].rows() || derivatives[k].cols() != samples[k].cols()))
        throw std::invalid_argument(std::string(where) + ": derivative dimension mismatch");
      if (k > 0 && !(times[k] > times[k - 1]))
        throw std::invalid_argument(std::string(where) + ": times must be strictly increasing");
    }
  }

  Matrix derivative(std::size_t k) const {
    if (!derivatives.empty()) return derivatives[k];
    const std::size_t last = samples.size() - 1;
    if (k == 0) return (samples[1] - samples[0]) / (times[1] - times[0]);
    if (k == last) return (samples[last] - samples[last - 1]) / (times[last] - times[last - 1]);
    return (samples[k + 1] - samples[k - 1]) / (times[k + 1] - times[k - 1]);
  }

  Matrix matrix_at(double t) const {
    if (evaluator) return evaluator(t);
    if (t <= times.front()) return samples.front();
    if (t >= times.back()) return samples.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    const double s = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - s) * samples[k - 1] + s * samples[k];
  }
};

/// Uniform grid of `steps` intervals on [t0, t1] sampled from A(t) (and Ȧ(t) if given).
inline MatrixPath sample_path(const std::function<Matrix(double)>& a,
                              const std::function<Matrix(double)>& a_dot, double t0, double t1,
                              int steps) {
  if (steps < 1 || !(t1 > t0)) throw std::invalid_argument("timevary/sample_path: need t1 > t0 and steps >= 1");
  MatrixPath p;
  p.evaluator = a;
  for (int k = 0; k <= steps; ++k) {
    const double t = k == steps ? t1 : t0 + (t1 - t0) * k / steps;
    p.times.push_back(t);
    p.samples.push_back(a(t));
    if (a_dot) p.derivatives.push_back(a_dot(t));
  }
  return p;
}

struct PathPoint {
  double t = 0.0;
  double m_star = 0.0;
  Extremizer extremizer;
  bool restarted = false;
};

struct StructureSwitch {
  double t_before = 0.0;
  double t_after = 0.0;
  double t_estimate = 0.0;
  Partition from;
  Partition to;
};

struct MStarPath {
  std::vector<PathPoint> points;
  std::vector<StructureSwitch> switches;
  /// max_k m*(t_k): one floor that is contractive at every sample.
  double uniform_m_star = 0.0;
};

struct TrackOptions {
  /// Multi-start the inner problem at every corrected floor and restart if some pattern
  /// beats the tracked one; the sign test alone only certifies a local extremizer.
  bool verify_global = true;
  bool localize_switches = true;
  /// Residual |λ + target| after the corrector above which the step is redone from scratch.
  double restart_residual = 1e-6;
  /// Switch localization stops at Δt / refine_factor.
  double refine_factor = 64.0;
};

namespace detail {

inline DiagonalIterate with_floor_entries(const DiagonalIterate& it, const Partition& p, double m) {
  DiagonalIterate out = it;
  out.floor = m;
  for (Index i : p.at_floor) out.d(i) = m;
  out.clamp();
  return out;
}

inline double floor_slope(const Extremizer& e, const Partition& p) {
  double s = 0.0;
  for (Index i : p.at_floor) s += e.stationarity(i);
  return s;
}

/// Predictor + single Newton step from the point at t_k to t_{k+1}; empty if the step must
/// be redone with a full solve.
inline std::optional<Extremizer> track_step(const PathPoint& prev, const Matrix& a_dot, const Matrix& a_next,
                                            double dt, const OuterConfig& cfg, const TrackOptions& opts) {
  const Extremizer& e = prev.extremizer;
  const Partition& p = e.partition;
  if (!p.interior.empty() || p.at_floor.empty()) return std::nullopt;

  // dλ/dt at fixed D is ½ xᵀ(DȦ + ȦᵀD)x = xᵀDȦx.
  const double gamma = e.x.dot(e.iterate.d.cwiseProduct(a_dot * e.x));
  const double zeta = floor_slope(e, p);
  if (!(zeta < 0.0)) return std::nullopt;
  const double m_pred = std::clamp(prev.m_star - dt * gamma / zeta, 0.0, 1.0);

  const Extremizer predicted = make_extremizer(a_next, with_floor_entries(e.iterate, p, m_pred), cfg.flow.eps_active);
  if (!(predicted.partition == p)) return std::nullopt;
  const double slope = floor_slope(predicted, p);
  if (!(slope < 0.0)) return std::nullopt;
  const double m_new = std::clamp(m_pred - (predicted.lambda + cfg.target) / slope, 0.0, 1.0);

  Extremizer corrected = make_extremizer(a_next, with_floor_entries(e.iterate, p, m_new), cfg.flow.eps_active);
  if (!(corrected.partition == p)) return std::nullopt;
  if (!check_first_order(corrected, 0.0, cfg.flow.tol_interior).ok()) return std::nullopt;
  if (std::abs(corrected.lambda + cfg.target) > opts.restart_residual) return std::nullopt;
  if (opts.verify_global) {
    const Extremizer check = minimize_F(a_next, m_new, corrected.iterate, cfg.flow);
    if (check.lambda > corrected.lambda + 1e-9 * (1.0 + std::abs(corrected.lambda))) return std::nullopt;
  }
  return corrected;
}

}  // namespace detail

inline MStarPath mstar_path(const MatrixPath& path, const OuterConfig& cfg, const TrackOptions& opts = {}) {
  path.validate("timevary/mstar_path");
  cfg.validate();
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double mu = mu2(path.samples[k]);
    if (mu + cfg.target >= 0.0) {
      throw NotContractive("timevary/mstar_path",
                           "contractivity lost at t = " + std::to_string(path.times[k]) +
                               " (mu2 + target = " + std::to_string(mu + cfg.target) + ")");
    }
  }

  MStarPath out;
  {
    MStarSolve first = solve_mstar(path.samples[0], cfg);
    out.points.push_back(PathPoint{path.times[0], first.m_star, std::move(first.extremizer), true});
  }
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const double dt = path.times[k + 1] - path.times[k];
    std::optional<Extremizer> tracked =
        detail::track_step(out.points.back(), path.derivative(k), path.samples[k + 1], dt, cfg, opts);
    if (tracked) {
      const double m = tracked->iterate.floor;
      out.points.push_back(PathPoint{path.times[k + 1], m, std::move(*tracked), false});
    } else {
      MStarSolve full = solve_mstar(path.samples[k + 1], cfg);
      out.points.push_back(PathPoint{path.times[k + 1], full.m_star, std::move(full.extremizer), true});
    }
  }

  for (std::size_t k = 0; k + 1 < out.points.size(); ++k) {
    const Partition& from = out.points[k].extremizer.partition;
    const Partition& to = out.points[k + 1].extremizer.partition;
    if (from == to) continue;
    StructureSwitch sw{out.points[k].t, out.points[k + 1].t, 0.0, from, to};
    double lo = sw.t_before, hi = sw.t_after;
    if (opts.localize_switches) {
      const double width = (hi - lo) / opts.refine_factor;
      while (hi - lo > width * (1.0 + 1e-12)) {
        const double mid = 0.5 * (lo + hi);
        const MStarSolve s = solve_mstar(path.matrix_at(mid), cfg);
        if (s.extremizer.partition == from) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
    }
    sw.t_estimate = 0.5 * (lo + hi);
    out.switches.push_back(std::move(sw));
  }
  for (const PathPoint& pt : out.points) out.uniform_m_star = std::max(out.uniform_m_star, pt.m_star);
  return out;
}

struct Mu2Point {
  double t = 0.0;
  /// max_{D ∈ Ω_m} μ₂(D A(t)).
  double mu2 = 0.0;
  Extremizer extremizer;
};

struct Mu2Path {
  double m = 0.0;
  std::vector<Mu2Point> points;
};

/// Worst-case logarithmic norm over Ω_m at each grid point.
inline Mu2Path worst_mu2_path(const MatrixPath& path, double m, const FlowConfig& cfg, bool warm_start = true) {
  path.validate("timevary/worst_mu2_path");
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("timevary/worst_mu2_path: m must lie in [0, 1]");
  Mu2Path out;
  out.m = m;
  for (std::size_t k = 0; k < path.size(); ++k) {
    std::optional<DiagonalIterate> start;
    if (warm_start && !out.points.empty()) start = out.points.back().extremizer.iterate;
    Extremizer e = minimize_F(path.samples[k], m, start, cfg);
    out.points.push_back(Mu2Point{path.times[k], e.lambda, std::move(e)});
  }
  return out;
}

struct AmplificationBound {
  /// Trapezoidal Q[μ₂] over the grid.
  double quadrature = 0.0;
  /// exp(Q[μ₂]).
  double C = 1.0;
  double min_mu2 = 0.0;
  double max_mu2 = 0.0;
};

inline AmplificationBound amplification_bound(const Mu2Path& mu_path) {
  if (mu_path.points.empty()) throw std::invalid_argument("timevary/bound_C: empty path");
  AmplificationBound b;
  b.min_mu2 = b.max_mu2 = mu_path.points.front().mu2;
  for (std::size_t k = 0; k < mu_path.points.size(); ++k) {
    const Mu2Point& p = mu_path.points[k];
    b.min_mu2 = std::min(b.min_mu2, p.mu2);
    b.max_mu2 = std::max(b.max_mu2, p.mu2);
    if (k > 0) {
      const Mu2Point& q = mu_path.points[k - 1];
      b.quadrature += 0.5 * (p.t - q.t) * (p.mu2 + q.mu2);
    }
  }
  b.C = std::exp(b.quadrature);
  return b;
}

/// C̃ = exp of the trapezoidal integral of μ₂(t).
inline double bound_C(const Mu2Path& mu_path) { return amplification_bound(mu_path).C; }

}  // namespace contractive
