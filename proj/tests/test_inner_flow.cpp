#include <random>

#include <gtest/gtest.h>

#include "contractive/builtins.hpp"
#include "contractive/inner.hpp"
#include "support/oracles.hpp"

using namespace contractive;

TEST(InnerFlow, FunctionalMatchesOracle) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 4);
    DiagonalIterate it{Vector(4), 0.2};
    for (Index i = 0; i < 4; ++i) it.d(i) = u(rng);
    EXPECT_NEAR(functional_F(it, a).first, -oracle::lambda_of(it.d, a), 1e-12);
  }
}

TEST(InnerFlow, FreeGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.3, 0.9);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 2 + trial % 5);
    const Index n = a.rows();
    DiagonalIterate it{Vector(n), 0.1};
    for (Index i = 0; i < n; ++i) it.d(i) = u(rng);
    const FreeGradient g = free_gradient(it, a);
    if (g.eig.gap < 1e-4) continue;
    auto F = [&](const Vector& d) { return -oracle::lambda_of(d, a); };
    for (Index i = 0; i < n; ++i) EXPECT_NEAR(g.g(i), oracle::central_diff(F, it.d, i, 1e-6), 1e-6);
  }
}

TEST(InnerFlow, GradientSignExample) {
  const Matrix a = builtins::ex2();
  DiagonalIterate it{Vector(3), 0.9};
  it.d << 0.9, 0.9, 1.0;
  const FreeGradient g2 = free_gradient(it, a);
  EXPECT_NEAR(g2.eig.value, -0.1523266, 1e-6);
  EXPECT_NEAR(g2.g(0), -0.45926177, 1e-7);
  EXPECT_NEAR(g2.g(1), 1.05165935, 1e-7);
  EXPECT_NEAR(g2.g(2), -0.38083127, 1e-7);
}

TEST(InnerFlow, ProjectionRespectsActiveBounds) {
  DiagonalIterate it{Vector(3), 0.5};
  it.d << 0.5, 0.75, 1.0;
  Vector v(3);
  v << -1, -1, 1;
  const Vector p = project_direction(it, v, 1e-10);
  EXPECT_EQ(p(0), 0.0);
  EXPECT_EQ(p(1), -1.0);
  EXPECT_EQ(p(2), 0.0);
  v << 1, 1, -1;
  EXPECT_EQ(project_direction(it, v, 1e-10), v);
}

TEST(InnerFlow, EulerStepDecreasesStrictlyAndStaysInBox) {
  std::mt19937_64 rng(12);
  FlowConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_contractive(rng, 4, 0.3);
    DiagonalIterate it = DiagonalIterate::identity(4, 0.25);
    SingleLayerObjective obj(a);
    Evaluation cur = obj.evaluate(it.d);
    double h = cfg.h0;
    for (int s = 0; s < 30; ++s) {
      const StepOutcome o = euler_step(it, a, cur, h, cfg);
      if (!o.accepted) break;
      EXPECT_GT(o.eval.lambda, cur.lambda);  // F = −λ strictly decreases
      EXPECT_NO_THROW(o.iterate.validate("test"));
      it = o.iterate;
      cur = o.eval;
      h = o.h_next;
    }
  }
}

TEST(InnerFlow, StepSizeGrowsByThetaWithoutRejection) {
  const Matrix a = builtins::ex2();
  FlowConfig cfg;
  DiagonalIterate it{Vector::Constant(3, 0.95), 0.5};
  const Evaluation cur = SingleLayerObjective(a).evaluate(it.d);
  const StepOutcome o = euler_step(it, a, cur, 1e-3, cfg);
  ASSERT_TRUE(o.accepted);
  EXPECT_EQ(o.rejections, 0);
  EXPECT_DOUBLE_EQ(o.h_next, cfg.theta * o.h_used);
}

TEST(InnerFlow, TraceIsMonotoneAndFeasible) {
  FlowConfig cfg;
  cfg.record_trace = true;
  const Extremizer e = minimize_F(builtins::ex2(), 0.5, std::nullopt, cfg);
  ASSERT_GE(e.trace.size(), 2u);
  for (std::size_t k = 1; k < e.trace.size(); ++k) EXPECT_LT(e.trace[k].F, e.trace[k - 1].F);
  EXPECT_NO_THROW(e.iterate.validate("test"));
}

TEST(InnerFlow, MinimumMatchesVertexEnumeration) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> um(0.05, 0.95);
  FlowConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = oracle::random_contractive(rng, 2 + trial % 6, 0.2);
    const double m = um(rng);
    const Extremizer e = minimize_F(a, m, std::nullopt, cfg);
    const auto [lambda, vertex] = oracle::max_lambda(a, m);
    EXPECT_NEAR(e.lambda, lambda, 1e-8) << "trial " << trial;
    EXPECT_TRUE(e.converged);
  }
}

TEST(InnerFlow, ExampleTwoAtPointEightHasUniqueExtremizer) {
  FlowConfig cfg;
  const Extremizer e = minimize_F(builtins::ex2(), 0.8, std::nullopt, cfg);
  EXPECT_EQ(e.partition.at_one, (std::vector<Index>{0, 2}));
  EXPECT_EQ(e.partition.at_floor, (std::vector<Index>{1}));
  EXPECT_EQ(e.located.size(), 1u);
  EXPECT_TRUE(check_first_order(e).ok());
}

TEST(InnerFlow, NonUniqueExtremizersAreLocated) {
  FlowConfig cfg;
  const Extremizer e = minimize_F(builtins::nonunique(), 0.2, std::nullopt, cfg);
  ASSERT_EQ(e.located.size(), 3u);
  EXPECT_NEAR(e.located[0].second, -1.1427, 1e-3);
  EXPECT_NEAR(e.located[1].second, -0.8764, 1e-3);
  EXPECT_NEAR(e.located[2].second, -0.8237, 1e-3);
  EXPECT_NEAR(e.F(), -1.14273, 1e-5);
}

TEST(InnerFlow, FirstOrderReportFlagsEachRule) {
  Partition p;
  p.at_one = {0};
  p.at_floor = {1};
  p.interior = {2};
  Vector xz(3);
  xz << -0.1, 0.2, 0.3;
  const FirstOrderReport r = check_first_order(p, xz, 1e-9, 1e-6);
  ASSERT_EQ(r.violations.size(), 3u);
  EXPECT_EQ(r.violations[0].rule, FirstOrderRule::kAtOne);
  EXPECT_EQ(r.violations[1].rule, FirstOrderRule::kAtFloor);
  EXPECT_EQ(r.violations[2].rule, FirstOrderRule::kInterior);
  xz << 0.1, -0.2, 1e-8;
  EXPECT_TRUE(check_first_order(p, xz, 1e-9, 1e-6).ok());
}

TEST(InnerFlow, FloorOneGivesIdentity) {
  FlowConfig cfg;
  const Matrix a = builtins::ex2();
  const Extremizer e = minimize_F(a, 1.0, std::nullopt, cfg);
  EXPECT_NEAR(e.lambda, mu2(a), 1e-14);
}

TEST(InnerFlow, DeterministicAcrossCalls) {
  FlowConfig cfg;
  std::mt19937_64 rng(14);
  const Matrix a = oracle::random_contractive(rng, 12, 0.1);
  const Extremizer e1 = minimize_F(a, 0.3, std::nullopt, cfg);
  const Extremizer e2 = minimize_F(a, 0.3, std::nullopt, cfg);
  EXPECT_EQ(e1.lambda, e2.lambda);
  EXPECT_EQ(e1.iterate.d, e2.iterate.d);
}

TEST(InnerFlow, RejectsInvalidInput) {
  FlowConfig cfg;
  EXPECT_THROW(minimize_F(builtins::ex2(), 1.5, std::nullopt, cfg), std::invalid_argument);
  EXPECT_THROW(minimize_F(builtins::ex2(), 0.5, DiagonalIterate::identity(2, 0.5), cfg), std::invalid_argument);
  DiagonalIterate outside{Vector::Constant(3, 0.1), 0.5};
  EXPECT_THROW(minimize_F(builtins::ex2(), 0.5, outside, cfg), std::invalid_argument);
  cfg.theta = 1.0;
  EXPECT_THROW(minimize_F(builtins::ex2(), 0.5, std::nullopt, cfg), std::invalid_argument);
}
