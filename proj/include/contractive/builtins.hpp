#pragma once

// Named reference matrices and matrix paths, so runs and tests need no data files.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "contractive/linalg.hpp"
#include "contractive/timevary.hpp"

namespace contractive::builtins {

/// 2×2; m* = 10 − 4√6.
inline Matrix ex1() {
  Matrix a(2, 2);
  a << -2, 1,
        2, -3;
  return a;
}

/// 3×3; m* = 0.802344071921729 with extremizer diag(1, m, 1).
inline Matrix ex2() {
  Matrix a(3, 3);
  a << -2, 1, 2,
       -1, -3, 1,
        0, 4, -3;
  return a;
}

/// Three distinct local extremizers at m = 0.2.
inline Matrix nonunique() {
  Matrix a(3, 3);
  a << -3, 1, 1.5,
       -1, -1, 3,
       -1, -3, 0;
  return a;
}

/// t ∈ [0, π]; ex3(0) = ex1().
inline Matrix ex3(double t) {
  Matrix a(2, 2);
  a << -2 - std::sin(t), std::cos(t),
        2, -2 - std::cos(t);
  return a;
}

inline Matrix ex3_dot(double t) {
  Matrix a(2, 2);
  a << -std::cos(t), -std::sin(t),
        0, std::sin(t);
  return a;
}

/// t ∈ [0, 1]; the floor pattern changes near t = 0.7.
inline Matrix ex4(double t) {
  Matrix a(3, 3);
  a << -t - 1, 1, t / 2 + 0.5,
       -1, t - 3, t + 1,
        3 - 2 * t, 1 - 2 * t, 2 * t - 4;
  return a;
}

inline Matrix ex4_dot(double) {
  Matrix a(3, 3);
  a << -1, 0, 0.5,
        0, 1, 1,
       -2, -2, 2;
  return a;
}

inline constexpr double ex3_T = std::numbers::pi;
inline constexpr double ex4_T = 1.0;

inline MatrixPath ex3_path(int steps, double T = ex3_T) { return sample_path(ex3, ex3_dot, 0.0, T, steps); }
inline MatrixPath ex4_path(int steps, double T = ex4_T) { return sample_path(ex4, ex4_dot, 0.0, T, steps); }

inline const std::vector<std::string>& matrix_names() {
  static const std::vector<std::string> names{"ex1", "ex2", "nonunique"};
  return names;
}

inline const std::vector<std::string>& path_names() {
  static const std::vector<std::string> names{"ex3", "ex4"};
  return names;
}

inline std::optional<Matrix> matrix(const std::string& name) {
  if (name == "ex1") return ex1();
  if (name == "ex2") return ex2();
  if (name == "nonunique") return nonunique();
  return std::nullopt;
}

/// Default horizon (π for ex3, 1 for ex4) unless T is given.
inline std::optional<MatrixPath> path(const std::string& name, int steps, std::optional<double> T = std::nullopt) {
  if (name == "ex3") return ex3_path(steps, T.value_or(ex3_T));
  if (name == "ex4") return ex4_path(steps, T.value_or(ex4_T));
  return std::nullopt;
}

}  // namespace contractive::builtins
