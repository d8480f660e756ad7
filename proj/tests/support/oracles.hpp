#pragma once

// Independent reference computations for the tests. Nothing here calls into the library's
// solvers: eigenvalues come from a cyclic Jacobi sweep, maxima over Ω_m from vertex
// enumeration (λ_max(Sym(DA)) is convex in D, so its maximum over the box sits at a vertex).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct JacobiResult {
  Vector values;   // ascending
  Matrix vectors;  // columns match values
};

inline JacobiResult jacobi(Matrix s) {
  const Index n = s.rows();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-30 * (1.0 + s.squaredNorm())) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (s(p, q) == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Index k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (Index k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return s(a, a) < s(b, b); });
  JacobiResult r{Vector(n), Matrix(n, n)};
  for (Index i = 0; i < n; ++i) {
    r.values(i) = s(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    r.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return r;
}

inline Matrix sym(const Matrix& b) { return 0.5 * (b + b.transpose()); }

inline double lambda_max(const Matrix& s) { return jacobi(s).values.maxCoeff(); }

inline double mu2(const Matrix& a) { return lambda_max(sym(a)); }

inline double lambda_of(const Vector& d, const Matrix& a) { return mu2(d.asDiagonal() * a); }

inline Vector vertex(std::uint64_t mask, Index n, double m) {
  Vector d(n);
  for (Index i = 0; i < n; ++i) d(i) = ((mask >> i) & 1U) ? 1.0 : m;
  return d;
}

/// max_{D ∈ Ω_m} λ_max(Sym(DA)) by vertex enumeration; returns (λ, maximizing vertex).
inline std::pair<double, Vector> max_lambda(const Matrix& a, double m) {
  const Index n = a.rows();
  double best = -std::numeric_limits<double>::infinity();
  Vector arg;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const Vector d = vertex(mask, n, m);
    const double l = lambda_of(d, a);
    if (l > best) {
      best = l;
      arg = d;
    }
  }
  return {best, arg};
}

/// Product D_k A_k ⋯ D₁ A₁ with the layer diagonals stacked in `d`.
inline Matrix dense_product(const std::vector<Matrix>& layers, const Vector& d) {
  const Index n = layers.front().rows();
  Matrix p = Matrix::Identity(n, n);
  for (std::size_t i = 0; i < layers.size(); ++i)
    p = d.segment(static_cast<Index>(i) * n, n).asDiagonal() * layers[i] * p;
  return p;
}

/// Vertex enumeration over all layers (λ is convex in each D_i separately).
inline double max_lambda_layers(const std::vector<Matrix>& layers, double m) {
  const Index total = layers.front().rows() * static_cast<Index>(layers.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << total); ++mask)
    best = std::max(best, mu2(dense_product(layers, vertex(mask, total, m))));
  return best;
}

/// Smallest m with max_{Ω_m} λ ≤ −target, by plain bisection (λ[m] is nonincreasing).
inline double mstar_bisect(const std::function<double(double)>& lambda_at, double target = 0.0) {
  double lo = 0.0, hi = 1.0;
  if (lambda_at(0.0) + target <= 0.0) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (lambda_at(mid) + target > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double mstar(const Matrix& a, double target = 0.0) {
  return mstar_bisect([&](double m) { return max_lambda(a, m).first; }, target);
}

/// Central difference of f at x along coordinate i.
inline double central_diff(const std::function<double(const Vector&)>& f, const Vector& x, Index i, double h) {
  Vector xp = x, xm = x;
  xp(i) += h;
  xm(i) -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// Gaussian entries shifted so that μ₂ = −margin.
inline Matrix random_contractive(std::mt19937_64& rng, Index n, double margin) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  const double mu = mu2(a);
  a.diagonal().array() -= mu + margin;
  return a;
}

inline Matrix random_matrix(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return a;
}

}  // namespace oracle
