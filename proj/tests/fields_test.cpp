#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "lagflow/field.hpp"
#include "lagflow/field_io.hpp"

using namespace lagflow;
using Catch::Approx;

namespace {

GridSpec grid2(int n, double L = 3.0) { return GridSpec{2, L, n}; }

Field gaussian(const GridSpec& g) {
  return Field::scalar_from(g, [&](const Point& x) {
    double r2 = 0.0;
    for (int a = 0; a < g.d; ++a) r2 += x[a] * x[a];
    return std::exp(-r2);
  });
}

double interior_max_error(const Field& f, const Field& exact) {
  double e = 0.0;
  for (std::size_t q = 0; q < f.points(); ++q)
    if (in_interior(f.grid(), q, kInteriorFraction)) e = std::max(e, std::abs(f(0, q) - exact(0, q)));
  return e;
}

}  // namespace

TEST_CASE("weight values") {
  CHECK(weight({0.0, 0.0, 0.0}, 2) == 1.0);
  CHECK(weight({3.0, 4.0, 0.0}, 2) == Approx(std::sqrt(26.0)).epsilon(1e-15));
  CHECK(weight({1.0, 0.0, 0.0}, 2) == Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("weight Peetre-type inequality on random pairs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int d = 2; d <= 3; ++d) {
    for (int i = 0; i < 2000; ++i) {
      Point x{u(rng), u(rng), u(rng)};
      Point y{u(rng), u(rng), u(rng)};
      Point s{x[0] + y[0], x[1] + y[1], x[2] + y[2]};
      REQUIRE(weight(x, d) >= 1.0);
      REQUIRE(weight(s, d) <= 2.0 * weight(x, d) * weight(y, d));
    }
  }
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((GridSpec{4, 1.0, 16}.validate()), Error);
  CHECK_THROWS_AS((GridSpec{2, 1.0, 7}.validate()), Error);
  CHECK_THROWS_AS((GridSpec{2, -1.0, 16}.validate()), Error);
  CHECK_NOTHROW((GridSpec{3, 1.0, 8}.validate()));
  const GridSpec g{2, 2.0, 9};
  CHECK(g.h() == 0.5);
  CHECK(g.points() == 81u);
  CHECK(g.index(g.coords(40)) == 40u);
}

TEST_CASE("derivative of constants and quadratics") {
  const auto g = grid2(24);
  const Field c = Field::scalar_from(g, [](const Point&) { return 3.5; });
  CHECK(derivative(c, {1, 0, 0}).max_abs() < 1e-12);
  const Field x2 = Field::scalar_from(g, [](const Point& x) { return x[0] * x[0]; });
  const Field d2 = derivative(x2, {2, 0, 0});
  for (std::size_t q = 0; q < g.points(); ++q) REQUIRE(d2(0, q) == Approx(2.0).margin(1e-9));
}

TEST_CASE("Gaussian first derivative matches closed form at second order") {
  double prev = 0.0;
  for (int n : {48, 95}) {
    const auto g = grid2(n);
    const Field f = gaussian(g);
    const Field exact = Field::scalar_from(g, [](const Point& x) { return -2.0 * x[0] * std::exp(-x[0] * x[0] - x[1] * x[1]); });
    const double e = interior_max_error(derivative(f, {1, 0, 0}), exact);
    CHECK(e < g.h() * g.h());
    if (prev > 0.0) CHECK(prev / e == Approx(4.0).epsilon(0.15));
    prev = e;
  }
}

TEST_CASE("derivative is linear and orders above the budget are rejected") {
  const auto g = grid2(20);
  const Field f = gaussian(g);
  const Field h = Field::scalar_from(g, [](const Point& x) { return std::sin(x[0]) * x[1]; });
  const Field lhs = derivative(2.0 * f + (-3.0) * h, {1, 1, 0});
  const Field rhs = 2.0 * derivative(f, {1, 1, 0}) + (-3.0) * derivative(h, {1, 1, 0});
  for (std::size_t q = 0; q < g.points(); ++q) REQUIRE(lhs(0, q) == Approx(rhs(0, q)).margin(1e-11));
  try {
    (void)derivative(f, {4, 3, 0});
    FAIL("expected order-too-high");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::order_too_high);
  }
}

TEST_CASE("mixed partials commute") {
  const auto g = grid2(40);
  const Field f = Field::scalar_from(g, [](const Point& x) { return std::exp(-x[0] * x[0] - 0.5 * x[1] * x[1]) * (1 + x[0]); });
  const Field xy = partial(partial(f, 0), 1);
  const Field yx = partial(partial(f, 1), 0);
  const double scale = xy.max_abs();
  double diff = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) diff = std::max(diff, std::abs(xy(0, q) - yx(0, q)));
  CHECK(diff <= 10.0 * g.h() * g.h() * scale);
}

TEST_CASE("gradient and divergence layout") {
  const auto g = grid2(16);
  const Field v = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> o) {
    o[0] = 2.0 * x[0] + 3.0 * x[1];
    o[1] = -x[0] + 5.0 * x[1];
  });
  const Field J = gradient(v);
  CHECK(J.rank() == Rank::matrix);
  CHECK(J(0, 10) == Approx(2.0));
  CHECK(J(1, 10) == Approx(3.0));
  CHECK(J(2, 10) == Approx(-1.0));
  CHECK(J(3, 10) == Approx(5.0));
  const Field dv = divergence(v);
  for (std::size_t q = 0; q < g.points(); ++q) REQUIRE(dv(0, q) == Approx(7.0));
}

TEST_CASE("sample reproduces nodes and affine fields, and flags clamping") {
  const auto g = grid2(12, 2.0);
  const Field f = gaussian(g);
  for (std::size_t q = 0; q < g.points(); q += 7) CHECK(sample(f, g.point(q)).values[0] == f(0, q));
  const Field lin = Field::scalar_from(g, [](const Point& x) { return 0.3 * x[0] - 1.7 * x[1] + 0.25; });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Point x{u(rng), u(rng), 0.0};
    const auto s = sample(lin, x);
    REQUIRE(s.values[0] == Approx(0.3 * x[0] - 1.7 * x[1] + 0.25).margin(1e-13));
    REQUIRE_FALSE(s.clamped);
  }
  const auto out = sample(lin, {2.5, 0.0, 0.0});
  CHECK(out.clamped);
  CHECK(out.values[0] == Approx(0.3 * 2.0 + 0.25));
}

TEST_CASE("sample of a Gaussian converges at second order off-grid") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Point> pts;
  for (int i = 0; i < 300; ++i) pts.push_back({u(rng), u(rng), 0.0});
  std::vector<double> errs;
  for (int n : {40, 79}) {
    const auto g = grid2(n);
    const Field f = gaussian(g);
    double e = 0.0;
    for (const auto& x : pts) e = std::max(e, std::abs(sample(f, x).values[0] - std::exp(-x[0] * x[0] - x[1] * x[1])));
    CHECK(e < g.h() * g.h());
    errs.push_back(e);
  }
  CHECK(errs[0] / errs[1] > 3.0);
}

TEST_CASE("interpolant gradient is the exact derivative of the bilinear interpolant") {
  const auto g = grid2(10, 1.0);
  const Field v = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> o) {
    o[0] = std::sin(2 * x[0]) * x[1];
    o[1] = x[0] * x[0] - x[1];
  });
  const Point x{0.123, -0.456, 0.0};
  const auto r = sample_with_gradient(v, x);
  const double eps = 1e-7;
  for (int j = 0; j < 2; ++j) {
    Point xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    for (int i = 0; i < 2; ++i) {
      const double fd = (sample(v, xp).values[i] - sample(v, xm).values[i]) / (2 * eps);
      CHECK(r.jacobian[i][j] == Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("binary dump round trip and CSV header") {
  const auto g = GridSpec{3, 1.5, 9};
  const Field v = Field::from_function(g, Rank::vector, [](const Point& x, std::span<double> o) {
    o[0] = x[0];
    o[1] = x[1] * x[2];
    o[2] = 1.0 / 3.0;
  });
  const auto dir = std::filesystem::temp_directory_path() / "lagflow_fields_test";
  std::filesystem::create_directories(dir);
  io::write_binary(v, dir / "v.lgfd");
  const Field back = io::read_binary(dir / "v.lgfd");
  REQUIRE(back.compatible(v));
  for (std::size_t i = 0; i < v.values().size(); ++i) REQUIRE(back.values()[i] == v.values()[i]);
  io::write_csv(v, dir / "v.csv");
  std::ifstream in(dir / "v.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x_1,x_2,x_3,v1,v2,v3");
  try {
    (void)io::read_binary(dir / "missing.lgfd");
    FAIL("expected missing-artifact");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_artifact);
  }
  std::filesystem::remove_all(dir);
}
