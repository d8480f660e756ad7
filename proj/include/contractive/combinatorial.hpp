#pragma once

// Search over binary diagonals {m, 1}ⁿ: enumeration with sign certification, greedy
// flipping of violated entries, and the scalar root in m for a fixed pattern.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "contractive/inner.hpp"
#include "contractive/linalg.hpp"

namespace contractive {

/// bits[i] = true puts 1 on the diagonal, false puts the floor m.
struct Pattern {
  std::vector<bool> bits;

  Index size() const { return static_cast<Index>(bits.size()); }

  Vector diagonal(double m) const {
    Vector d(size());
    for (Index i = 0; i < size(); ++i) d(i) = bits[static_cast<std::size_t>(i)] ? 1.0 : m;
    return d;
  }

  static Pattern from_mask(std::uint64_t mask, Index n) {
    Pattern p;
    p.bits.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) p.bits[static_cast<std::size_t>(i)] = (mask >> i) & 1U;
    return p;
  }

  std::string str() const {
    std::string s;
    for (bool b : bits) s += b ? '1' : '0';
    return s;
  }

  friend bool operator==(const Pattern&, const Pattern&) = default;
  friend bool operator<(const Pattern& a, const Pattern& b) { return a.bits < b.bits; }
};

struct PatternEntry {
  Pattern pattern;
  double F = 0.0;
  bool is_local_min = false;
};

constexpr Index kMaxEnumerationDim = 16;

namespace detail {

/// Positive where the entry's sign condition fails (x_i z_i < 0 at 1, x_i z_i > 0 at m).
inline Vector sign_violations(const Pattern& p, const Vector& xz) {
  Vector v(p.size());
  for (Index i = 0; i < p.size(); ++i) v(i) = p.bits[static_cast<std::size_t>(i)] ? -xz(i) : xz(i);
  return v;
}

inline Extremizer pattern_extremizer(const Matrix& a, const Pattern& p, double m) {
  // Pattern entries are exact, so any positive eps classifies them.
  return make_extremizer(a, DiagonalIterate{p.diagonal(m), m}, 1e-10);
}

}  // namespace detail

/// F and local-extremality for all 2ⁿ patterns, sorted by F then pattern.
inline std::vector<PatternEntry> enumerate_extremizers(const Matrix& a, double m, double tol = 1e-9,
                                                       Index n_max = kMaxEnumerationDim) {
  require_square(a, "combinatorial/enumerate_extremizers");
  const Index n = a.rows();
  if (n > n_max) {
    throw std::invalid_argument("combinatorial/enumerate_extremizers: n = " + std::to_string(n) +
                                " exceeds the enumeration limit " + std::to_string(n_max));
  }
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("combinatorial/enumerate_extremizers: m must lie in [0, 1]");
  std::vector<PatternEntry> out;
  const std::uint64_t total = std::uint64_t{1} << n;
  out.reserve(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    PatternEntry entry;
    entry.pattern = Pattern::from_mask(mask, n);
    const Extremizer e = detail::pattern_extremizer(a, entry.pattern, m);
    entry.F = e.F();
    entry.is_local_min = (detail::sign_violations(entry.pattern, e.stationarity).array() <= tol).all();
    out.push_back(std::move(entry));
  }
  std::sort(out.begin(), out.end(), [](const PatternEntry& x, const PatternEntry& y) {
    if (x.F != y.F) return x.F < y.F;
    return x.pattern < y.pattern;
  });
  return out;
}

struct GreedyResult {
  Pattern pattern;
  Extremizer extremizer;
  int flips = 0;
  bool certified = false;
  bool cycled = false;
};

/// Flips the entry with the largest sign violation until none is left.
inline GreedyResult greedy_flip(const Matrix& a, double m, const Pattern& start, double tol = 1e-9) {
  require_square(a, "combinatorial/greedy_flip");
  if (start.size() != a.rows()) throw std::invalid_argument("combinatorial/greedy_flip: dimension mismatch");
  GreedyResult r;
  r.pattern = start;
  std::vector<Pattern> visited{start};
  const int max_flips = 4 * static_cast<int>(a.rows());
  GreedyResult best;
  bool have_best = false;

  while (true) {
    r.extremizer = detail::pattern_extremizer(a, r.pattern, m);
    if (!have_best || r.extremizer.F() < best.extremizer.F()) {
      best = r;
      have_best = true;
    }
    const Vector viol = detail::sign_violations(r.pattern, r.extremizer.stationarity);
    Index worst = 0;
    const double worst_value = viol.maxCoeff(&worst);
    if (worst_value <= tol) {
      r.certified = true;
      return r;
    }
    if (r.flips >= max_flips) break;
    r.pattern.bits[static_cast<std::size_t>(worst)] = !r.pattern.bits[static_cast<std::size_t>(worst)];
    ++r.flips;
    if (std::find(visited.begin(), visited.end(), r.pattern) != visited.end()) {
      best.cycled = true;
      best.flips = r.flips;
      return best;
    }
    visited.push_back(r.pattern);
  }
  best.flips = r.flips;
  return best;
}

/// m ∈ [0, 1] with λ_max(Sym(D_p[m] A)) = −target for the fixed pattern p.
inline double pattern_root(const Matrix& a, const Pattern& p, double target = 0.0,
                           double m_tol = 1e-14, double lambda_tol = 1e-13) {
  require_square(a, "combinatorial/pattern_root");
  if (p.size() != a.rows()) throw std::invalid_argument("combinatorial/pattern_root: dimension mismatch");
  if (std::all_of(p.bits.begin(), p.bits.end(), [](bool b) { return b; }))
    throw std::invalid_argument("combinatorial/pattern_root: pattern needs at least one floor entry");

  auto eval = [&](double m, double* slope) {
    const Extremizer e = detail::pattern_extremizer(a, p, m);
    if (slope) {
      double s = 0.0;
      for (Index i = 0; i < p.size(); ++i)
        if (!p.bits[static_cast<std::size_t>(i)]) s += e.stationarity(i);
      *slope = s;
    }
    return e.lambda + target;
  };

  const double g0 = eval(0.0, nullptr);
  const double g1 = eval(1.0, nullptr);
  if (g0 == 0.0) return 0.0;
  if (g1 == 0.0) return 1.0;
  if ((g0 > 0.0) == (g1 > 0.0)) {
    throw SolverError("combinatorial/pattern_root",
                      "no sign change on [0, 1] (g(0) = " + std::to_string(g0) +
                          ", g(1) = " + std::to_string(g1) + ")");
  }
  const bool decreasing = g0 > 0.0;
  double lo = 0.0, hi = 1.0;  // g(lo) has the sign of g0
  double m = 0.5;
  for (int it = 0; it < 200; ++it) {
    double slope = 0.0;
    const double g = eval(m, &slope);
    if (std::abs(g) <= lambda_tol) return m;
    if ((g > 0.0) == decreasing) {
      lo = m;
    } else {
      hi = m;
    }
    if (hi - lo <= m_tol) return 0.5 * (lo + hi);
    double next = 0.5 * (lo + hi);
    if (slope != 0.0) {
      const double newton = m - g / slope;
      if (newton > lo && newton < hi) next = newton;
    }
    m = next;
  }
  return m;
}

}  // namespace contractive
