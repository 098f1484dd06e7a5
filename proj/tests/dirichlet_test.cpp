#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "nlresolvent/dirichlet.hpp"
#include "nlresolvent/testkit.hpp"
#include "support.hpp"

namespace nlresolvent {
namespace {

using test::two_vertex_graph;

TEST(Solve, ZeroDataGivesZero) {
  const WeightedGraph g = testkit::generate(test::random_family(10, 1));
  const auto U = test::all_vertices(g);
  const SolveResult r =
      solve_dirichlet(g, Potential::constant(1.0), Nonlinearity::odd_power(3.0), VertexFunction{}, U);
  EXPECT_TRUE(r.converged);
  for (double v : r.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.residual_inf, 0.0);
}

TEST(Solve, TwoVertexLinear) {
  const WeightedGraph g = two_vertex_graph();
  const std::vector<VertexId> U{0, 1};
  const VertexFunction f = VertexFunction::delta(0);
  const Potential W = Potential::constant(1.0);
  const Nonlinearity id = Nonlinearity::identity();
  const SolveResult r = solve_dirichlet(g, W, id, f, U);
  ASSERT_TRUE(r.converged);
  // Hand elimination of [[2,-1],[-1,2]] u = (1, 0).
  EXPECT_NEAR(r.u(0), 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.u(1), 1.0 / 3.0, 1e-9);
  // Q(u) = 1/9 and the kappa term is 1/9 + 1/9.
  EXPECT_NEAR(r.energy_value, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(energy_functional(g, W, id, f, r.u, U), 1.0 / 3.0, 1e-9);
}

TEST(Solve, IsolatedVertexAnyPhi) {
  const WeightedGraph g = GraphBuilder().add_vertex(7, 1.0).build();
  const std::vector<VertexId> U{7};
  for (const char* spec : {"identity", "power:3", "power:0.5", "log", "atan"}) {
    const SolveResult r = solve_dirichlet(g, Potential::constant(2.0), Nonlinearity::parse(spec),
                                          VertexFunction::delta(7, 3.0), U);
    EXPECT_NEAR(r.u(7), 1.5, 1e-12) << spec;
  }
}

TEST(Solve, EmptyDomain) {
  const SolveResult r = solve_dirichlet(two_vertex_graph(), Potential::constant(1.0),
                                        Nonlinearity::identity(), VertexFunction::delta(0),
                                        std::span<const VertexId>{});
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.u.empty());
}

TEST(Solve, RejectsPotentialBelowBound) {
  Potential W{[](VertexId x) { return x == 0 ? 0.5 : 1.0; }, 1.0, "bad"};
  const std::vector<VertexId> U{0, 1};
  EXPECT_THROW(solve_dirichlet(two_vertex_graph(), W, Nonlinearity::identity(),
                               VertexFunction::delta(0), U),
               InvalidParameter);
}

TEST(Solve, MaxSweepsNeverReportsConverged) {
  const WeightedGraph g = testkit::generate(testkit::FinitePath{60});
  const auto U = test::all_vertices(g);
  SolveOptions opts;
  opts.max_sweeps = 2;
  opts.accelerate = false;
  const SolveResult r = solve_dirichlet(g, Potential::constant(0.01), Nonlinearity::odd_power(3.0),
                                        VertexFunction::constant_on(U, 1.0), U, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.sweeps_used, 2);
}

TEST(Energy, Examples) {
  const WeightedGraph g = two_vertex_graph();
  const std::vector<VertexId> U{0, 1};
  const Potential W = Potential::constant(1.0);
  const Nonlinearity id = Nonlinearity::identity();
  EXPECT_EQ(energy_functional(g, W, id, VertexFunction{}, VertexFunction{}, U), 0.0);
  EXPECT_EQ(energy_functional(g, W, id, VertexFunction::delta(0), VertexFunction{}, U), 1.0);
}

TEST(Residual, Examples) {
  const WeightedGraph g = two_vertex_graph();
  const std::vector<VertexId> U{0, 1};
  const Potential W = Potential::constant(1.0);
  const Nonlinearity id = Nonlinearity::identity();
  const VertexFunction f = VertexFunction::delta(0);
  const ResidualReport zero = residual(g, W, id, f, VertexFunction{}, U);
  EXPECT_EQ(*zero.entries[0].value, -1.0);
  EXPECT_EQ(*zero.entries[1].value, 0.0);

  const SolveResult r = solve_dirichlet(g, W, id, f, U);
  EXPECT_LE(residual(g, W, id, f, r.u, U).sup, 1e-9);
}

TEST(Residual, PerturbationIsLocal) {
  const WeightedGraph g = testkit::generate(testkit::FinitePath{9});
  const auto U = test::all_vertices(g);
  const Potential W = Potential::constant(1.0);
  const Nonlinearity n = Nonlinearity::odd_log();
  const VertexFunction f = VertexFunction::constant_on(U, 1.0);
  const SolveResult r = solve_dirichlet(g, W, n, f, U);
  VertexFunction bumped = r.u;
  bumped.set(4, r.u(4) + 0.01);
  const ResidualReport before = residual(g, W, n, f, r.u, U);
  const ResidualReport after = residual(g, W, n, f, bumped, U);
  for (std::size_t i = 0; i < U.size(); ++i) {
    const double delta = std::abs(*after.entries[i].value - *before.entries[i].value);
    if (std::abs(U[i] - 4) <= 1) {
      EXPECT_GT(delta, 1e-4) << U[i];
    } else {
      EXPECT_LT(delta, 1e-12) << U[i];
    }
  }
}

TEST(Residual, ReportsRangeViolations) {
  // L u(0) = 3 leaves ran arctan.
  const WeightedGraph g = two_vertex_graph();
  const std::vector<VertexId> U{0, 1};
  const ResidualReport r = residual(g, Potential::constant(1.0), Nonlinearity::bounded_atan(),
                                    VertexFunction{}, VertexFunction::delta(0, 3.0), U);
  // L u(1) = -3 leaves it as well.
  EXPECT_EQ(r.range_violations, 2u);
  EXPECT_FALSE(r.entries[0].value.has_value());
  EXPECT_FALSE(r.entries[1].value.has_value());
}

struct Case {
  WeightedGraph g;
  std::vector<VertexId> U;
  Potential W;
  VertexFunction f;
};

Case random_case(std::uint64_t seed, bool nonnegative) {
  testkit::Rng rng(seed);
  const WeightedGraph g = testkit::generate(test::random_family(12 + static_cast<int>(seed % 20), seed));
  const auto all = test::all_vertices(g);
  auto U = test::random_subset(all, rng, 0.7);
  std::vector<double> wv;
  for (std::size_t i = 0; i < all.size(); ++i) wv.push_back(rng.uniform(0.5, 3.0));
  Potential W{[wv](VertexId x) { return wv[static_cast<std::size_t>(x)]; }, 0.5, "random"};
  const VertexFunction f = test::random_function(all, rng, nonnegative ? 0.0 : -1.0, 1.0);
  return Case{g, U, W, f};
}

class SolverProperties : public ::testing::TestWithParam<int> {};

TEST_P(SolverProperties, BoundsSignMinimalityMonotoneStart) {
  const auto seed = static_cast<std::uint64_t>(GetParam());
  for (const char* spec : {"identity", "power:3", "power:0.5", "log", "atan"}) {
    const Nonlinearity n = Nonlinearity::parse(spec);
    for (bool nonneg : {true, false}) {
      const Case c = random_case(seed * 7 + (nonneg ? 1 : 0), nonneg);
      const SolveResult r = solve_dirichlet(c.g, c.W, n, c.f, c.U);
      ASSERT_TRUE(r.converged) << spec;
      EXPECT_LE(r.u.sup_norm(), c.f.sup_norm() / c.W.lower_bound + 1e-12) << spec;
      EXPECT_EQ(r.range_violations, 0u);
      // Stationarity L u = phi(f - W u), absolute or relative to its terms.
      for (VertexId x : c.U) {
        const double lu = laplacian_apply(c.g, r.u, x);
        const double rhs = n.phi(c.f(x) - c.W(x) * r.u(x));
        double scale = c.g.degree(x) * std::abs(r.u(x));
        for (const Neighbor& y : c.g.neighbors(x)) scale += y.weight * std::abs(r.u(y.id));
        scale = scale / c.g.measure(x) + std::abs(rhs);
        EXPECT_LE(std::abs(lu - rhs), 1e-9 * (1.0 + scale)) << spec << " at " << x;
      }
      // phi^{-1} = cube root amplifies rounding in L u near zero.
      if (std::string(spec) != "power:3") {
        EXPECT_LE(r.residual_inf, 1e-8) << spec;
      }
      if (nonneg) {
        for (double v : r.values) EXPECT_GE(v, 0.0) << spec;
        EXPECT_LE(r.max_decrease, 1e-12) << spec;
      }
      const double e0 = energy_functional(c.g, c.W, n, c.f, r.u, c.U);
      testkit::Rng rng(seed + 99);
      for (int k = 0; k < 4; ++k) {
        const VertexId x = c.U[rng.below(c.U.size())];
        for (double h : {1e-3, -1e-3, 1e-2, -1e-2}) {
          VertexFunction p = r.u;
          p.set(x, r.u(x) + h);
          EXPECT_GE(energy_functional(c.g, c.W, n, c.f, p, c.U), e0 - 1e-12) << spec;
        }
      }
    }
  }
}

TEST_P(SolverProperties, MatchesLinearOracle) {
  const Case c = random_case(500 + static_cast<std::uint64_t>(GetParam()), false);
  const SolveResult r = solve_dirichlet(c.g, c.W, Nonlinearity::identity(), c.f, c.U);
  const VertexFunction oracle = testkit::linear_oracle(c.g, c.W, c.f, c.U);
  EXPECT_LE(test::sup_diff(r.u, oracle, c.U), 1e-9);
}

TEST_P(SolverProperties, SweepOrderDoesNotChangeTheAnswer) {
  const Case c = random_case(900 + static_cast<std::uint64_t>(GetParam()), true);
  const Nonlinearity n = Nonlinearity::odd_power(3.0);
  SolveOptions natural;
  natural.sweep_order = SweepOrder::natural;
  natural.accelerate = false;
  const SolveResult a = solve_dirichlet(c.g, c.W, n, c.f, c.U);
  const SolveResult b = solve_dirichlet(c.g, c.W, n, c.f, c.U, natural);
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_LE(test::sup_diff(a.u, b.u, c.U), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SolverProperties, ::testing::Range(0, 12));

TEST(Comparison, DomainAndDataMonotonicity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    testkit::Rng rng(seed);
    const WeightedGraph g = testkit::generate(test::random_family(15, seed));
    const auto all = test::all_vertices(g);
    const auto V = test::random_subset(all, rng, 0.8);
    const auto U = test::random_subset(V, rng, 0.6);
    VertexFunction f;
    VertexFunction h;
    for (VertexId x : all) {
      const double a = rng.uniform(0.0, 1.0);
      f.set(x, a);
      h.set(x, a + rng.uniform(0.0, 1.0));
    }
    const Nonlinearity n = Nonlinearity::odd_log();
    const Potential W = Potential::constant(1.3);
    const SolveResult ru = solve_dirichlet(g, W, n, f, U);
    const SolveResult rv = solve_dirichlet(g, W, n, h, V);
    for (VertexId x : all) EXPECT_LE(ru.u(x), rv.u(x) + 1e-9);
  }
}

TEST(Comparison, Domination) {
  // log(1 + t) <= t and atan(t) <= t on [0, inf).
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    testkit::Rng rng(seed + 300);
    const WeightedGraph g = testkit::generate(test::random_family(15, seed + 300));
    const auto U = test::all_vertices(g);
    const VertexFunction f = test::random_function(U, rng, 0.0, 1.0);
    const SolveResult large = solve_dirichlet(g, Potential::constant(1.0), Nonlinearity::identity(), f, U);
    for (const Nonlinearity& psi : {Nonlinearity::odd_log(), Nonlinearity::bounded_atan()}) {
      const SolveResult small = solve_dirichlet(g, Potential::constant(2.0), psi, f, U);
      for (VertexId x : U) EXPECT_LE(small.u(x), large.u(x) + 1e-9) << psi.name();
    }
  }
}

TEST(Solve, WarmStartGivesSameAnswer) {
  const Case c = random_case(77, true);
  const Nonlinearity n = Nonlinearity::bounded_atan();
  const SolveResult cold = solve_dirichlet(c.g, c.W, n, c.f, c.U);
  std::vector<double> warm(c.U.size(), 0.0);
  for (std::size_t i = 0; i < warm.size(); ++i) warm[i] = 0.5 * cold.values[i];
  const SolveResult hot = solve_dirichlet(c.g, c.W, n, c.f, c.U, {}, warm);
  EXPECT_LE(test::sup_diff(cold.u, hot.u, c.U), 1e-9);
}

}  // namespace
}  // namespace nlresolvent
