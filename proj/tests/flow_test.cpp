#include <catch_amalgamated.hpp>

#include <cmath>

#include "lagflow/brownian.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/sobolev.hpp"

using namespace lagflow;
using Catch::Matchers::WithinAbs;

namespace {

Field constant_vector(const GridSpec& g, std::array<double, 3> c) {
  return Field::from_function(g, Rank::vector, [&](const Point&, std::span<double> v) {
    for (int a = 0; a < g.d; ++a) v[a] = c[a];
  });
}

Field linear_vector(const GridSpec& g, const Mat3& A) {
  return Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> v) {
    for (int i = 0; i < g.d; ++i) {
      v[i] = 0.0;
      for (int j = 0; j < g.d; ++j) v[i] += A[i][j] * x[j];
    }
  });
}

// zeta = (M - I) x, so eta = M x.
FlowState linear_state(const GridSpec& g, const Mat3& M) {
  FlowState s = initial_flow(g);
  Mat3 D = M;
  for (int a = 0; a < g.d; ++a) D[a][a] -= 1.0;
  s.zeta = linear_vector(g, D);
  refresh_monitor(s);
  return s;
}

// exp(A) for a 2x2 matrix by scaling and squaring of the Taylor series.
Mat3 expm2(const Mat3& A) {
  Mat3 B{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) B[i][j] = A[i][j] / 1024.0;
  Mat3 E{}, term{};
  E[0][0] = E[1][1] = term[0][0] = term[1][1] = 1.0;
  for (int k = 1; k < 20; ++k) {
    Mat3 t{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t[i][j] = (term[i][0] * B[0][j] + term[i][1] * B[1][j]) / k;
    term = t;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) E[i][j] += term[i][j];
  }
  for (int s = 0; s < 10; ++s) {
    Mat3 t{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) t[i][j] = E[i][0] * E[0][j] + E[i][1] * E[1][j];
    E = t;
  }
  return E;
}

double interior_zeta_error(const FlowState& s, const Mat3& E) {
  double err = 0.0;
  for (std::size_t q = 0; q < s.grid.points(); ++q) {
    if (!in_interior(s.grid, q, 0.5)) continue;
    const Point x = s.grid.point(q);
    for (int i = 0; i < 2; ++i) {
      const double exact = E[i][0] * x[0] + E[i][1] * x[1] - x[i];
      err = std::max(err, std::abs(s.zeta(i, q) - exact));
    }
  }
  return err;
}

}  // namespace

TEST_CASE("zero and constant drift integrate exactly", "[flow]") {
  const GridSpec g{2, 2.0, 17};
  const std::array<double, 3> zero{0.0, 0.0, 0.0};
  FlowState s = initial_flow(g);
  const Field none(g, Rank::vector);
  for (int k = 0; k < 5; ++k) s = advance_flow(s, none, zero, 1.0, 0.1);
  CHECK(s.zeta.max_abs() == 0.0);

  const std::array<double, 3> c{0.03, -0.02, 0.0};
  const Field drift = constant_vector(g, c);
  FlowState t = initial_flow(g);
  const int K = 8;
  const double dt = 0.05;
  for (int k = 0; k < K; ++k) t = advance_flow(t, drift, zero, 1.0, dt);
  for (std::size_t q = 0; q < g.points(); ++q) {
    CHECK_THAT(t.zeta(0, q), WithinAbs(c[0] * K * dt, 1e-14));
    CHECK_THAT(t.zeta(1, q), WithinAbs(c[1] * K * dt, 1e-14));
  }
}

TEST_CASE("linear drift follows the matrix exponential at first order", "[flow]") {
  const GridSpec g{2, 2.0, 33};
  const Mat3 A{{{0.02, 0.05, 0.0}, {-0.04, -0.01, 0.0}, {0.0, 0.0, 0.0}}};
  const Field drift = linear_vector(g, A);
  const double T = 1.0;
  const std::array<double, 3> zero{0.0, 0.0, 0.0};
  const Mat3 E = expm2(A);
  double errs[2];
  for (int r = 0; r < 2; ++r) {
    const int K = 10 << r;
    FlowState s = initial_flow(g);
    for (int k = 0; k < K; ++k) {
      // velocity at eta = x + zeta is A eta; sample the grid field there
      s = advance_flow(s, drift, zero, 1.0, T / K);
    }
    errs[r] = interior_zeta_error(s, E);
  }
  CHECK(errs[0] < 2e-3);
  CHECK(errs[0] / errs[1] > 1.7);
  CHECK(errs[0] / errs[1] < 2.3);
}

TEST_CASE("inversion of a translation and of a linear map", "[flow]") {
  const GridSpec g{2, 2.0, 21};
  FlowState s = initial_flow(g);
  s.zeta = constant_vector(g, {0.07, -0.03, 0.0});
  refresh_monitor(s);
  invert_flow(s);
  for (std::size_t q = 0; q < g.points(); ++q) {
    CHECK_THAT(s.kappa(0, q), WithinAbs(-0.07, 1e-12));
    CHECK_THAT(s.kappa(1, q), WithinAbs(0.03, 1e-12));
  }

  const Mat3 M{{{1.05, 0.08, 0.0}, {-0.06, 0.97, 0.0}, {0.0, 0.0, 1.0}}};
  FlowState l = linear_state(g, M);
  invert_flow(l);
  const Field grad_eta = jacobians(l);
  const double det = M[0][0] * M[1][1] - M[0][1] * M[1][0];
  const Mat3 Mi{{{M[1][1] / det, -M[0][1] / det, 0.0}, {-M[1][0] / det, M[0][0] / det, 0.0}, {0.0, 0.0, 1.0}}};
  double kerr = 0.0, jerr = 0.0, perr = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    if (!in_interior(g, q, 0.8)) continue;
    const Point x = g.point(q);
    for (int i = 0; i < 2; ++i) {
      const double ki = Mi[i][0] * x[0] + Mi[i][1] * x[1];
      kerr = std::max(kerr, std::abs(x[i] + l.kappa(i, q) - ki));
      for (int j = 0; j < 2; ++j) jerr = std::max(jerr, std::abs(l.grad_kappa(i * 2 + j, q) - Mi[i][j]));
    }
    // grad eta at kappa(x) times grad kappa(x)
    const auto ge = sample(grad_eta, l.kappa_label(q));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 2; ++k) acc += ge.values[i * 2 + k] * l.grad_kappa(k * 2 + j, q);
        perr = std::max(perr, std::abs(acc - (i == j ? 1.0 : 0.0)));
      }
  }
  CHECK(kerr < 1e-10);
  CHECK(jerr < 1e-10);
  CHECK(perr < 1e-6);
  CHECK(kappa_identity_deviation(l) < 0.5);
}

TEST_CASE("round trip and product identity on a curved flow", "[flow]") {
  const GridSpec g{2, 2.0, 41};
  FlowState s = initial_flow(g);
  s.zeta = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> v) {
    const double e = std::exp(-(x[0] * x[0] + x[1] * x[1]));
    v[0] = 0.05 * x[1] * e;
    v[1] = -0.04 * x[0] * e;
  });
  s.shift = {0.1, -0.05, 0.0};
  refresh_monitor(s);
  REQUIRE(s.monitor.valid);
  invert_flow(s);
  const Field grad_eta = jacobians(s);
  CHECK(round_trip_error(s) <= 1e-9 * g.L);
  double perr = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    if (!in_interior(g, q, 0.8)) continue;
    const auto ge = sample(grad_eta, s.kappa_label(q));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 2; ++k) acc += ge.values[i * 2 + k] * s.grad_kappa(k * 2 + j, q);
        perr = std::max(perr, std::abs(acc - (i == j ? 1.0 : 0.0)));
      }
  }
  // bilinear sampling of grad eta between nodes
  CHECK(perr < 2e-3);
  CHECK(kappa_identity_deviation(s) < 0.5);
  CHECK(weight_ratio(s) <= kWeightComparability * s.lambda);
}

TEST_CASE("identity flow has identity Jacobians", "[flow]") {
  const GridSpec g{3, 1.0, 9};
  FlowState s = initial_flow(g);
  invert_flow(s);
  const Field ge = jacobians(s);
  for (std::size_t q = 0; q < g.points(); ++q)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(ge(i * 3 + j, q) == (i == j ? 1.0 : 0.0));
        CHECK(s.grad_kappa(i * 3 + j, q) == (i == j ? 1.0 : 0.0));
      }
}

TEST_CASE("a large drift surfaces diffeo-violation", "[flow]") {
  const GridSpec g{2, 2.0, 33};
  const Mat3 A{{{0.0, 3.0, 0.0}, {-3.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}};
  Field drift = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> v) {
    v[0] = 3.0 * std::sin(2.0 * x[1]);
    v[1] = 0.0;
  });
  FlowState s = initial_flow(g);
  const std::array<double, 3> zero{0.0, 0.0, 0.0};
  bool raised = false;
  try {
    for (int k = 0; k < 20; ++k) s = advance_flow(s, drift, zero, 1.0, 0.05);
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::diffeo_violation;
  }
  CHECK(raised);
  (void)A;
}

TEST_CASE("Brownian ensemble statistics", "[flow]") {
  const int M = 512, steps = 20;
  const double dt = 0.05, T = steps * dt;
  const BrownianEnsemble ens(2, M, steps, dt, 1.0, 7);
  for (int a = 0; a < 2; ++a) {
    double mean = 0.0, var = 0.0;
    for (int m = 0; m < M; ++m) mean += ens.position(m, steps)[a];
    mean /= M;
    for (int m = 0; m < M; ++m) var += std::pow(ens.position(m, steps)[a] - mean, 2);
    var /= M - 1;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(T / M));
    CHECK(std::abs(var - T) <= 0.2 * T);
  }
  for (int m = 0; m < M; ++m)
    for (int k = 1; k <= steps; ++k) REQUIRE(ens.lambda(m, k) >= ens.lambda(m, k - 1));
  CHECK(ens.lambda(0, 0) == 1.0);
}

TEST_CASE("epsilon = 0 flows are bitwise reproducible", "[flow]") {
  const GridSpec g{2, 2.0, 25};
  const Field drift = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> v) {
    const double e = std::exp(-(x[0] * x[0] + x[1] * x[1]));
    v[0] = -0.1 * x[1] * e;
    v[1] = 0.1 * x[0] * e;
  });
  auto run = [&] {
    const BrownianEnsemble ens(2, 3, 6, 0.05, 0.0, 11);
    std::vector<FlowState> out;
    for (int m = 0; m < 3; ++m) {
      FlowState s = initial_flow(g);
      for (int k = 0; k < 6; ++k) s = advance_flow(s, drift, ens.shift(m, k + 1), ens.lambda(m, k + 1), 0.05);
      invert_flow(s);
      jacobians(s);
      out.push_back(s);
    }
    return out;
  };
  const auto a = run(), b = run();
  for (int m = 0; m < 3; ++m) {
    CHECK(std::equal(a[m].zeta.values().begin(), a[m].zeta.values().end(), b[m].zeta.values().begin()));
    CHECK(std::equal(a[m].kappa.values().begin(), a[m].kappa.values().end(), b[m].kappa.values().begin()));
    CHECK(std::equal(a[m].zeta.values().begin(), a[m].zeta.values().end(), a[0].zeta.values().begin()));
  }
}

TEST_CASE("growth monitor under constant drift", "[flow]") {
  const GridSpec g{2, 3.0, 33};
  const SpaceParams sp{2, 4.0, 4, 1.6};
  const NormSpec spec{sp, 2, sp.theta + 2, 4.0};
  auto ratios = [&](int K) {
    // localised drift so the weighted norms are finite on any box
    const Field drift = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> v) {
      const double e = std::exp(-(x[0] * x[0] + x[1] * x[1]) / 2.0);
      v[0] = 0.02 * e;
      v[1] = -0.01 * e;
    });
    const std::array<double, 3> zero{0.0, 0.0, 0.0};
    GrowthReport rep = make_growth_report(spec, 2);
    FlowState s = initial_flow(g);
    const double T = 1.0;
    for (int k = 0; k <= K; ++k) {
      invert_flow(s);
      jacobians(s);
      rep.series.push_back(growth_sample(s, spec));
      if (k < K) s = advance_flow(s, drift, zero, 1.0, T / K);
    }
    finalize_growth(rep);
    return rep;
  };
  const GrowthReport a = ratios(8), b = ratios(16);
  for (double r : a.series.front().raw) CHECK(r == 0.0);
  CHECK_FALSE(a.any_drift);
  // the sup and L_p ratios of zeta are constant in t to interpolation accuracy
  const auto& first = a.series[1].ratios;
  const auto& last = a.series.back().ratios;
  CHECK(std::abs(last[0] / first[0] - 1.0) < 0.05);
  CHECK(std::abs(last[1] / first[1] - 1.0) < 0.05);
  for (std::size_t i = 0; i < last.size(); ++i) {
    const double rb = b.series.back().ratios[i];
    if (last[i] > 1e-12) CHECK(std::abs(rb / last[i] - 1.0) < 0.10);
  }
}
