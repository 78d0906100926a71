#include <catch_amalgamated.hpp>

#include <cmath>

#include "lagflow/corpus.hpp"
#include "lagflow/sobolev.hpp"

using namespace lagflow;
using Catch::Approx;

namespace {

SpaceParams space2() {
  SpaceParams s;
  s.d = 2;
  s.p = 4.0;
  s.theta = 1.6;
  s.l = 4;
  return s;
}

Field gaussian(const GridSpec& g) {
  return Field::scalar_from(g, [](const Point& x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); });
}

// Radial quadrature of the Gaussian in d = 2, p = 4 at 30 digits.
constexpr double kLpOracle = 0.951309339821261667;     // exponent sigma - 1 = 0.1
constexpr double kSobolevOracle = 10.9285371159730669;  // l = 2, delta = theta + l
constexpr double kSobolevTerms[3] = {1.07841164722815712, 2.23932696071228890, 7.61079850803262087};

}  // namespace

TEST_CASE("weighted L_p norm basics") {
  const GridSpec g{2, 4.0, 40};
  const Field z(g, Rank::scalar);
  CHECK(weighted_lp_norm(z, 0.3, 4.0) == 0.0);
  const Field f = gaussian(g);
  const double a = weighted_lp_norm(f, 0.7, 4.0);
  CHECK(weighted_lp_norm(-2.5 * f, 0.7, 4.0) == Approx(2.5 * a).epsilon(1e-14));
}

TEST_CASE("weighted L_p norm of a Gaussian matches the radial oracle") {
  const GridSpec g{2, 4.0, 64};
  const auto s = space2();
  CHECK(weighted_lp_norm(gaussian(g), s.sigma() - 1.0, 4.0) == Approx(kLpOracle).epsilon(0.01));
}

TEST_CASE("Sobolev norm reports") {
  const GridSpec g{2, 4.0, 64};
  const auto s = space2();
  SECTION("zero field gives an all-zero report") {
    const auto r = sobolev_norm(Field(g, Rank::vector), NormSpec{s, 3, 4.6, 4.0});
    CHECK(r.total == 0.0);
    for (double v : r.sup_norms) CHECK(v == 0.0);
  }
  SECTION("l = 0 collapses to the weighted L_p norm") {
    const NormSpec spec{s, 0, 2.0, 4.0};
    CHECK(sobolev_norm(gaussian(g), spec).total == weighted_lp_norm(gaussian(g), spec.exponent(0), 4.0));
  }
  SECTION("Gaussian with l = 2 matches closed-form derivatives") {
    const auto r = sobolev_norm(gaussian(g), NormSpec{s, 2, s.theta + 2, 4.0});
    CHECK(r.total == Approx(kSobolevOracle).epsilon(0.02));
    for (int k = 0; k < 3; ++k) CHECK(r.per_order[static_cast<std::size_t>(k)] == Approx(kSobolevTerms[k]).epsilon(0.03));
    CHECK(r.total == Approx(r.per_order[0] + r.per_order[1] + r.per_order[2]).epsilon(1e-14));
    nlohmann::json j = r;
    CHECK(j["per_order"].size() == 3);
    CHECK(j.contains("sup_norms"));
  }
  SECTION("adding orders never decreases the total") {
    const Field f = scalar_corpus(g, 1, 5).front();
    double prev = 0.0;
    for (int l = 0; l <= 4; ++l) {
      const double t = sobolev_norm(f, NormSpec{s, l, 5.0, 4.0}).total;
      CHECK(t >= prev);
      prev = t;
    }
  }
  SECTION("order above the stencil budget is rejected") {
    CHECK_THROWS_AS(sobolev_norm(gaussian(g), NormSpec{s, 7, 8.0, 4.0}), Error);
  }
}

TEST_CASE("triangle inequality on corpus pairs") {
  const GridSpec g{2, 4.0, 48};
  const auto s = space2();
  const auto c = scalar_corpus(g, 20, 99);
  const NormSpec spec{s, 2, s.theta + 2, 4.0};
  for (std::size_t i = 0; i + 1 < c.size(); i += 2) {
    const double lhs = sobolev_norm(c[i] + c[i + 1], spec).total;
    const double rhs = sobolev_norm(c[i], spec).total + sobolev_norm(c[i + 1], spec).total;
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("weighted sup norms are controlled by the next-order Sobolev norm, stably under refinement") {
  const auto s = space2();
  const int l = 2;
  std::vector<double> constants;
  for (int n : {48, 64}) {
    const GridSpec g{2, 4.0, n};
    double c_emb = 0.0;
    for (const Field& f : scalar_corpus(g, 12, 21)) {
      const auto low = sobolev_norm(f, NormSpec{s, l, s.theta + l, 4.0});
      const double high = sobolev_norm(f, NormSpec{s, l + 1, s.theta + l, 4.0}).total;
      for (double v : low.sup_norms) c_emb = std::max(c_emb, v / high);
    }
    REQUIRE(std::isfinite(c_emb));
    constants.push_back(c_emb);
  }
  CHECK(constants[1] / constants[0] < 2.0);
  CHECK(constants[0] / constants[1] < 2.0);
}

TEST_CASE("ring check") {
  const auto s = space2();
  SECTION("zero factors are flagged") {
    const GridSpec g{2, 4.0, 24};
    const auto r = ring_check(Field(g, Rank::scalar), Field(g, Rank::scalar), NormSpec{s, 2, 1.0, 4.0});
    CHECK(r.flagged);
    CHECK(r.ratio == 0.0);
  }
  SECTION("delta below d/p is rejected") {
    const GridSpec g{2, 4.0, 24};
    CHECK_THROWS_AS(ring_check(gaussian(g), gaussian(g), NormSpec{s, 2, 0.25, 4.0}), Error);
  }
  SECTION("ratio of a field and a smooth bump is stable under refinement") {
    auto make = [&](int n) {
      const GridSpec g{2, 4.0, n};
      const auto m = corpus_members(GridSpec{2, 4.0, 64}, 1, 3).front();
      const Field u = Field::scalar_from(g, [&](const Point& x) { return m(x, 2); });
      const Field v = Field::scalar_from(g, [](const Point& x) {
        return 1.0 / (1.0 + std::exp(2.0 * (x[0] * x[0] + x[1] * x[1] - 1.0))) * std::exp(-0.1 * (x[0] * x[0] + x[1] * x[1]));
      });
      return ring_check(u, v, NormSpec{s, 2, 1.0, 4.0}).ratio;
    };
    const double coarse = make(64);
    const double fine = make(127);
    CHECK(coarse == Approx(fine).epsilon(0.05));
  }
  SECTION("corpus maximum is finite and stable") {
    std::vector<double> maxima;
    for (int n : {48, 64}) {
      const GridSpec g{2, 4.0, n};
      const auto c = scalar_corpus(g, 100, 17);
      double m = 0.0;
      for (std::size_t i = 0; i + 1 < c.size(); i += 2) {
        const auto r = ring_check(c[i], c[i + 1], NormSpec{s, 2, 1.0, 4.0});
        REQUIRE_FALSE(r.flagged);
        m = std::max(m, r.ratio);
      }
      REQUIRE(std::isfinite(m));
      maxima.push_back(m);
    }
    CHECK(maxima[1] == Approx(maxima[0]).epsilon(0.2));
  }
}

TEST_CASE("A_p products") {
  const auto s = space2();
  SECTION("constant weight gives exactly one") {
    const auto r = ap_check(0.0, 4.0, 40);
    CHECK(r.max_product == Approx(1.0).margin(1e-6));
    CHECK(r.min_product == Approx(1.0).margin(1e-6));
  }
  SECTION("alpha = sigma is bounded and stable under sample doubling") {
    const auto a = ap_check(s.sigma(), 4.0, 200);
    const auto b = ap_check(s.sigma(), 4.0, 400);
    CHECK(std::isfinite(a.max_product));
    CHECK(a.max_product >= 1.0 - 1e-9);
    CHECK(b.max_product == Approx(a.max_product).epsilon(0.1));
  }
  SECTION("growth past the d(p - 1) threshold on large balls") {
    const Point o{0.0, 0.0, 0.0};
    auto growth = [&](double alpha) {
      const double R1 = 100.0, R2 = 1000.0;
      return ap_product(2, o, R2, alpha, 4.0, make_ball_quadrature(2, R2)) /
             ap_product(2, o, R1, alpha, 4.0, make_ball_quadrature(2, R1));
    };
    const double below = growth(4.0);
    const double above = growth(8.0);
    CHECK(below < 1.3);
    CHECK(above > 20.0);
  }
  SECTION("too few samples is rejected") { CHECK_THROWS_AS(ap_check(0.0, 4.0, 5), Error); }
}
