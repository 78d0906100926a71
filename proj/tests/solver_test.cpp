#include <catch_amalgamated.hpp>

#include <cmath>

#include "lagflow/reference.hpp"
#include "lagflow/solver.hpp"

using namespace lagflow;

namespace {

SolverConfig small_config(int n, int M, double epsilon) {
  SolverConfig c;
  c.grid = GridSpec{2, 2.0, n};
  c.ensemble = EnsembleSpec{M, 0.01, 0.01, epsilon, 3};
  c.tol_picard = 1e-10;
  c.max_picard = 10;
  c.T_max = 1.0;
  return c;
}

reference::OracleSolution euler_vortex(double amp = 1.0) {
  return reference::stationary_euler_vortex(reference::VortexProfile::gaussian_vorticity, amp, 0.3);
}

double rel_l2_outside_core(const GridSpec& g, const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    if (!in_interior(g, q, kInteriorFraction)) continue;
    const Point x = g.point(q);
    if (std::hypot(x[0], x[1]) <= 2.0 * g.h()) continue;
    for (int c = 0; c < 2; ++c) {
      num += std::pow(a(c, q) - b(c, q), 2);
      den += b(c, q) * b(c, q);
    }
  }
  return std::sqrt(num / den);
}

bool bitwise_equal(const Field& a, const Field& b) {
  return a.compatible(b) && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

}  // namespace

TEST_CASE("zero data converges at the first iteration", "[solver]") {
  SolverConfig c = small_config(24, 2, 0.1);
  const Field u0(c.grid, Rank::vector);
  const SolveResult r = solve(c, u0, ForcingSpec{});
  REQUIRE(r.trace.rows.size() == 1);
  CHECK(r.trace.rows[0].cauchy == 0.0);
  CHECK(r.trace.converged);
  for (const auto& u : r.u) CHECK(u.max_abs() == 0.0);
  for (const auto& row : r.residual) CHECK(row.sup == 0.0);

  c.auto_horizon = true;
  const HorizonReport h = choose_horizon(c, u0, ForcingSpec{});
  CHECK(h.degenerate);
  CHECK(h.T == c.T_max);
}

TEST_CASE("horizon from a synthetic constant-drift probe", "[solver]") {
  // |grad zeta| = s t with the other guards negligible
  const double s = 0.8;
  std::vector<double> t;
  std::vector<GuardValues> q;
  for (int k = 0; k <= 10; ++k) {
    t.push_back(0.01 * k);
    q.push_back(GuardValues{1e-6 * t.back(), s * t.back(), 1e-6 * t.back(), 0.0});
  }
  const HorizonReport h = horizon_from_probe(t, q, 2, 10.0);
  CHECK(h.binding == 1);
  CHECK_THAT(h.T, Catch::Matchers::WithinRel(0.5 / (2.0 * 2 * s), 1e-12));
}

TEST_CASE("horizon halves when the data doubles", "[solver]") {
  SolverConfig c = small_config(40, 1, 0.0);
  const auto ev1 = euler_vortex(1.0), ev2 = euler_vortex(2.0);
  const HorizonReport a = choose_horizon(c, ev1.field(c.grid, 0.0), ForcingSpec{});
  const HorizonReport b = choose_horizon(c, ev2.field(c.grid, 0.0), ForcingSpec{});
  REQUIRE_FALSE(a.degenerate);
  const double ratio = a.T / b.T;
  CHECK(ratio > 2.0 / 1.3);
  CHECK(ratio < 2.0 * 1.3);
}

TEST_CASE("an oversized horizon trips a guard", "[solver]") {
  SolverConfig c = small_config(40, 1, 0.0);
  const Field u0 = euler_vortex().field(c.grid, 0.0);
  const HorizonReport h = choose_horizon(c, u0, ForcingSpec{});
  c.ensemble.T = 100.0 * h.T;
  try {
    solve(c, u0, ForcingSpec{});
    FAIL("expected a guard violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::guard_violation);
    const std::string what = e.what();
    CHECK((what.find("(i)") != std::string::npos || what.find("(ii)") != std::string::npos));
  }
}

TEST_CASE("stationary Euler vortex stays put", "[solver]") {
  SolverConfig c = small_config(48, 1, 0.0);
  c.auto_horizon = true;
  c.ensemble.dt = 0.001;
  const auto ev = euler_vortex();
  const Field u0 = ev.field(c.grid, 0.0);
  const SolveResult r = solve(c, u0, ForcingSpec{});
  CHECK(r.trace.converged);
  CHECK(rel_l2_outside_core(c.grid, r.u.back(), u0) < 0.02);
  // Cauchy differences fall monotonically
  for (std::size_t i = 1; i < r.trace.rows.size(); ++i) CHECK(r.trace.rows[i].cauchy < r.trace.rows[i - 1].cauchy);
  CHECK(r.diagnostics.round_trip <= 1e-8 * c.grid.L);
  CHECK(r.diagnostics.kappa_deviation < 0.5);
  CHECK(r.diagnostics.weight_ratio <= kWeightComparability);
  CHECK(r.diagnostics.divergence < 1e-2);

  // residual of the solver output against the residual of the exact (constant) series
  const std::vector<Field> exact(r.mesh.times.size(), u0);
  const auto e = residual_check(exact, r.mesh.times, ForcingSpec{}, 0.0, c.space);
  REQUIRE(e.size() == r.residual.size());
  for (std::size_t k = 0; k < e.size(); ++k) CHECK(r.residual[k].sup <= 5.0 * e[k].sup);
}

TEST_CASE("Lamb-Oseen residual shrinks with the grid", "[solver]") {
  const double nu = 0.01;
  const auto lo = reference::lamb_oseen(1.0, 2.25, nu);
  double prev = 0.0;
  for (int n : {48, 96}) {
    const GridSpec g{2, 2.0, n};
    std::vector<Field> u;
    std::vector<double> t;
    const double dt = 0.02 * 48.0 / n;
    for (int k = 0; k < 5; ++k) {
      t.push_back(k * dt);
      u.push_back(lo.field(g, t.back()));
    }
    const auto rows = residual_check(u, t, ForcingSpec{}, std::sqrt(2.0 * nu), SpaceParams{});
    double worst = 0.0;
    for (const auto& row : rows) worst = std::max(worst, row.sup);
    if (prev > 0.0) CHECK(prev / worst > 3.0);
    prev = worst;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("epsilon = 0 ensembles carry identical samples", "[solver]") {
  SolverConfig c = small_config(32, 3, 0.0);
  c.ensemble.T = 0.004;
  c.keep_sample_velocities = true;
  const Field u0 = euler_vortex().field(c.grid, 0.0);
  const SolveResult r = solve(c, u0, ForcingSpec{});
  REQUIRE(r.final_sample_velocities.size() == 3);
  CHECK(bitwise_equal(r.final_sample_velocities[0], r.final_sample_velocities[1]));
  CHECK(bitwise_equal(r.final_sample_velocities[0], r.final_sample_velocities[2]));
  CHECK(bitwise_equal(r.final_sample_velocities[0], r.u.back()));
}

TEST_CASE("results do not depend on the worker count", "[solver]") {
  SolverConfig c = small_config(32, 6, 0.14);
  c.ensemble.T = 0.004;
  const auto lo = reference::lamb_oseen(1.0, 2.25, 0.01);
  const Field u0 = lo.field(c.grid, 0.0);
  c.workers = 1;
  const SolveResult a = solve(c, u0, ForcingSpec{});
  c.workers = 4;
  const SolveResult b = solve(c, u0, ForcingSpec{});
  REQUIRE(a.u.size() == b.u.size());
  for (std::size_t k = 0; k < a.u.size(); ++k) CHECK(bitwise_equal(a.u[k], b.u[k]));
}

TEST_CASE("a divergent initial field is rejected", "[solver]") {
  SolverConfig c = small_config(24, 1, 0.0);
  const Field u0 = Field::from_function(c.grid, Rank::vector, [](const Point& x, std::span<double> v) {
    v[0] = x[0] * std::exp(-(x[0] * x[0] + x[1] * x[1]));
    v[1] = 0.0;
  });
  CHECK_THROWS_AS(solve(c, u0, ForcingSpec{}), Error);
}
