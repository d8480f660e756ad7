#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "contractive/builtins.hpp"
#include "contractive/outer.hpp"
#include "support/oracles.hpp"

using namespace contractive;

TEST(OuterSolve, ExampleOne) {
  const MStarSolve s = solve_mstar(builtins::ex1(), OuterConfig{});
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.m_star, 10.0 - 4.0 * std::sqrt(6.0), 1e-10);
  EXPECT_EQ(s.extremizer.partition.at_floor.size(), 1u);
  EXPECT_EQ(s.extremizer.partition.at_one.size(), 1u);
  EXPECT_NEAR(s.extremizer.lambda, 0.0, 1e-10);
}

TEST(OuterSolve, ExampleTwoNewtonTrace) {
  OuterConfig cfg;
  cfg.m0 = 0.9;
  const MStarSolve s = solve_mstar(builtins::ex2(), cfg);
  ASSERT_TRUE(s.converged);
  ASSERT_EQ(s.trace.rows.size(), 4u);
  EXPECT_NEAR(s.m_star, 0.802344071921729, 1e-9);
  const double phi[] = {0.1063080754141469, -5.0218775356e-3, -9.6738747e-6, -3.6123531e-11};
  for (int k = 0; k < 4; ++k) {
    const TraceRow& r = s.trace.rows[static_cast<std::size_t>(k)];
    EXPECT_EQ(r.k, k);
    EXPECT_EQ(r.kind, k == 0 ? StepKind::kInitial : StepKind::kNewton);
    ASSERT_TRUE(r.dphi.has_value());
    EXPECT_GT(*r.dphi, 0.0);
    EXPECT_LT(std::abs(r.phi), 10.0 * std::abs(phi[k]));
    EXPECT_GT(std::abs(r.phi), 0.1 * std::abs(phi[k]));
  }
  EXPECT_NEAR(s.trace.rows[0].m, 0.9, 0.0);
  EXPECT_NEAR(*s.trace.rows[0].dphi, 1.041560098368529, 1e-9);
  EXPECT_EQ(s.extremizer.partition.at_floor, (std::vector<Index>{1}));
}

TEST(OuterSolve, UpperBoundExampleOne) {
  EXPECT_NEAR(upper_bound_mstar(builtins::ex1()), 0.7776, 1e-4);
}

TEST(OuterSolve, MatchesBisectionOracleOnRandomMatrices) {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> margin(0.05, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix a = oracle::random_contractive(rng, 2 + trial % 5, margin(rng));
    const MStarSolve s = solve_mstar(a, OuterConfig{});
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.m_star, oracle::mstar(a), 1e-8) << "trial " << trial;
    EXPECT_LE(s.m_star, upper_bound_mstar(a) + 1e-10);
  }
}

TEST(OuterSolve, NonzeroTarget) {
  OuterConfig cfg;
  cfg.target = 0.1;
  const Matrix a = builtins::ex2();
  const MStarSolve s = solve_mstar(a, cfg);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.extremizer.lambda, -0.1, 1e-9);
  EXPECT_NEAR(s.m_star, oracle::mstar(a, 0.1), 1e-8);
  // A stricter level needs more damping, so a larger floor.
  EXPECT_GT(s.m_star, solve_mstar(a, OuterConfig{}).m_star);
}

TEST(OuterSolve, LambdaIsNonincreasingInM) {
  std::mt19937_64 rng(21);
  FlowConfig flow;
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = oracle::random_contractive(rng, 4, 0.3);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 20; ++k) {
      const double lambda = minimize_F(a, k / 20.0, std::nullopt, flow).lambda;
      EXPECT_LE(lambda, prev + 1e-10);
      prev = lambda;
    }
  }
}

TEST(OuterSolve, DerivativeMatchesFiniteDifferenceOfLambda) {
  FlowConfig flow;
  const Matrix a = builtins::ex2();
  const double m = 0.7, h = 1e-6;
  const Extremizer e = minimize_F(a, m, std::nullopt, flow);
  const PhiDerivative pd = phi_and_derivative(e);
  ASSERT_TRUE(pd.dphi.has_value());
  const double fd = -(minimize_F(a, m + h, std::nullopt, flow).lambda - minimize_F(a, m - h, std::nullopt, flow).lambda) / (2 * h);
  EXPECT_NEAR(*pd.dphi, fd, 1e-6);
}

TEST(OuterSolve, NotContractiveIsReported) {
  EXPECT_THROW(solve_mstar(Matrix::Identity(2, 2), OuterConfig{}), NotContractive);
  EXPECT_THROW(upper_bound_mstar(Matrix::Zero(3, 3)), NotContractive);
  OuterConfig cfg;
  cfg.target = 0.5;
  EXPECT_THROW(solve_mstar(builtins::ex2(), cfg), NotContractive);
}

TEST(OuterSolve, DiagonalMatrixHasZeroFloor) {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << -1, -2, -0.5;
  const MStarSolve s = solve_mstar(a, OuterConfig{});
  // λ[m] = −m/2 here, so the residual test stops within phi_tol of zero.
  EXPECT_LE(s.m_star, 1e-9);
}

TEST(OuterSolve, BracketIsConsistent) {
  const MStarSolve s = solve_mstar(builtins::ex2(), OuterConfig{});
  for (const TraceRow& r : s.trace.rows) {
    EXPECT_LE(r.bracket_lo, r.m + 1e-15);
    EXPECT_GE(r.bracket_hi, r.m - 1e-15);
    EXPECT_LE(r.bracket_lo, 0.8023440719535 + 1e-12);
    EXPECT_GE(r.bracket_hi, 0.8023440719535 - 1e-12);
  }
}

TEST(OuterSolve, WarmStartGivesSameRoot) {
  const Matrix a = builtins::ex2();
  const MStarSolve cold = solve_mstar(a, OuterConfig{});
  const MStarSolve warm = solve_mstar(a, OuterConfig{}, cold.extremizer.iterate);
  EXPECT_NEAR(cold.m_star, warm.m_star, 1e-12);
}

TEST(OuterSolve, RejectsBadConfig) {
  OuterConfig cfg;
  cfg.m_tol = 0.0;
  EXPECT_THROW(solve_mstar(builtins::ex2(), cfg), std::invalid_argument);
  cfg = OuterConfig{};
  cfg.m0 = 1.5;
  EXPECT_THROW(solve_mstar(builtins::ex2(), cfg), std::invalid_argument);
}
