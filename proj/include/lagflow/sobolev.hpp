#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <json.hpp>

#include "lagflow/error.hpp"
#include "lagflow/field.hpp"
#include "lagflow/parallel.hpp"

namespace lagflow {

/// Selects |.|_{H^l_{delta,p}}: order-k term carries the weight w^{delta - l + k - d/p}.
struct NormSpec {
  SpaceParams space{};
  int l = 2;
  double delta = 0.0;
  double p = 4.0;

  double exponent(int k) const { return delta - l + k - static_cast<double>(space.d) / p; }
};

struct NormReport {
  std::vector<double> per_order;  ///< weighted L_p norm of |D^k f|, k = 0..l
  double total = 0.0;             ///< sum of per_order
  std::vector<double> sup_norms;  ///< |w^{sigma+k-1} D^k f|_inf, k = 0..l
  double two_term = 0.0;          ///< lowest-order plus highest-order term only
};

inline void to_json(nlohmann::json& j, const NormReport& r) {
  j = nlohmann::json{{"per_order", r.per_order}, {"total", r.total}, {"sup_norms", r.sup_norms},
                     {"two_term", r.two_term}};
}

/// (sum_grid w^{p*exponent} |f|^p h^d)^{1/p}; |f| is the Euclidean norm across components.
inline double weighted_lp_norm(const Field& f, double exponent, double p) {
  require(p >= 1.0, ErrorCode::invalid_argument, "p must be >= 1");
  const GridSpec& g = f.grid();
  std::vector<double> terms(g.points());
  for (std::size_t q = 0; q < g.points(); ++q) {
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) s += f(c, q) * f(c, q);
    if (s == 0.0) {
      terms[q] = 0.0;
      continue;
    }
    const double w = weight(g.point(q), g.d);
    terms[q] = std::pow(w, p * exponent) * std::pow(s, 0.5 * p);
  }
  return std::pow(pairwise_sum(terms) * g.cell_volume(), 1.0 / p);
}

/// Multi-indices of total order k in d dimensions, lexicographic.
inline std::vector<MultiIndex> multi_indices(int d, int k) {
  std::vector<MultiIndex> out;
  if (d == 2) {
    for (int a = k; a >= 0; --a) out.push_back({a, k - a, 0});
  } else {
    for (int a = k; a >= 0; --a)
      for (int b = k - a; b >= 0; --b) out.push_back({a, b, k - a - b});
  }
  return out;
}

inline double multinomial(const MultiIndex& gamma, int d) {
  auto fact = [](int m) {
    double r = 1.0;
    for (int i = 2; i <= m; ++i) r *= i;
    return r;
  };
  double r = fact(order_of(gamma, d));
  for (int a = 0; a < d; ++a) r /= fact(gamma[a]);
  return r;
}

/// Pointwise |D^k f| as the Euclidean norm of the full k-tensor of derivatives
/// (ordered index tuples, so mixed partials carry multinomial multiplicity).
inline Field derivative_magnitude(const Field& f, int k, int budget = kDefaultStencilBudget) {
  const GridSpec& g = f.grid();
  Field mag(g, Rank::scalar);
  if (k == 0) {
    for (std::size_t q = 0; q < g.points(); ++q) {
      double s = 0.0;
      for (int c = 0; c < f.components(); ++c) s += f(c, q) * f(c, q);
      mag(0, q) = std::sqrt(s);
    }
    return mag;
  }
  auto acc = mag.component(0);
  for (const auto& gamma : multi_indices(g.d, k)) {
    const Field dg = derivative(f, gamma, budget);
    const double mult = multinomial(gamma, g.d);
    for (int c = 0; c < f.components(); ++c) {
      const auto src = dg.component(c);
      for (std::size_t q = 0; q < g.points(); ++q) acc[q] += mult * src[q] * src[q];
    }
  }
  for (double& v : acc) v = std::sqrt(v);
  return mag;
}

/// Sup of w^{exponent} |f| over the grid.
inline double weighted_sup_norm(const Field& f, double exponent) {
  const GridSpec& g = f.grid();
  double m = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) s += f(c, q) * f(c, q);
    if (s == 0.0) continue;
    m = std::max(m, std::pow(weight(g.point(q), g.d), exponent) * std::sqrt(s));
  }
  return m;
}

inline NormReport sobolev_norm(const Field& f, const NormSpec& spec, int budget = kDefaultStencilBudget) {
  require(spec.l >= 0, ErrorCode::invalid_argument, "norm order l must be >= 0");
  require(spec.p > 1.0, ErrorCode::invalid_argument, "norm exponent p must be > 1");
  if (spec.l > budget)
    throw Error(ErrorCode::order_too_high,
                "norm order " + std::to_string(spec.l) + " exceeds stencil budget " + std::to_string(budget));
  NormReport r;
  const double sigma = spec.space.theta - static_cast<double>(f.grid().d) / spec.p;
  for (int k = 0; k <= spec.l; ++k) {
    const Field mag = derivative_magnitude(f, k, budget);
    r.per_order.push_back(weighted_lp_norm(mag, spec.exponent(k), spec.p));
    r.sup_norms.push_back(weighted_sup_norm(mag, sigma + k - 1.0));
  }
  for (double v : r.per_order) r.total += v;
  r.two_term = r.per_order.front() + (spec.l > 0 ? r.per_order.back() : 0.0);
  return r;
}

// ---------------------------------------------------------------------------

struct RingReport {
  double ratio = 0.0;
  double product_norm = 0.0;
  double u_norm = 0.0;
  double v_norm = 0.0;
  bool flagged = false;  ///< a factor norm fell below the division guard
};

inline constexpr double kRingDivisionGuard = 1e-14;

/// |uv|_{H^l_{delta+l,p}} / (|u| |v|) with both factors in the same space.
inline RingReport ring_check(const Field& u, const Field& v, const NormSpec& spec) {
  require(u.compatible(v) && u.rank() == Rank::scalar, ErrorCode::invalid_argument,
          "ring_check takes two scalar fields on one grid");
  const double dp = static_cast<double>(u.grid().d) / spec.p;
  require(spec.delta >= dp, ErrorCode::invalid_argument, "ring_check needs delta >= d/p");
  NormSpec shifted = spec;
  shifted.delta = spec.delta + spec.l;
  RingReport r;
  r.u_norm = sobolev_norm(u, shifted).total;
  r.v_norm = sobolev_norm(v, shifted).total;
  if (r.u_norm < kRingDivisionGuard || r.v_norm < kRingDivisionGuard) {
    r.flagged = true;
    return r;
  }
  Field uv = u;
  for (std::size_t q = 0; q < u.points(); ++q) uv(0, q) = u(0, q) * v(0, q);
  r.product_norm = sobolev_norm(uv, shifted).total;
  r.ratio = r.product_norm / (r.u_norm * r.v_norm);
  return r;
}

// ---------------------------------------------------------------------------
// Ball averages of powers of the weight.

struct BallQuadrature {
  std::vector<std::array<double, 3>> offsets;
  std::vector<double> weights;
};

/// Product rule on B_R: composite Gauss-Legendre in r over geometric panels that
/// refine toward the centre, uniform in angle.
inline BallQuadrature make_ball_quadrature(int d, double R) {
  using GL = boost::math::quadrature::gauss<double, 16>;
  BallQuadrature q;
  const int panels = std::max(4, static_cast<int>(std::ceil(std::log2(std::max(R, 1.0)))) + 4);
  std::vector<double> edges{0.0};
  for (int i = panels - 1; i >= 0; --i) edges.push_back(R / std::pow(2.0, i));
  auto radial = [&](auto&& emit) {
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const double a = edges[e];
      const double b = edges[e + 1];
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      const auto& x = GL::abscissa();
      const auto& w = GL::weights();
      for (std::size_t k = 0; k < x.size(); ++k) {
        const int signs = (x[k] == 0.0) ? 1 : 2;
        for (int s = 0; s < signs; ++s) {
          const double r = mid + (s == 0 ? 1.0 : -1.0) * half * x[k];
          emit(r, half * w[k]);
        }
      }
    }
  };
  if (d == 2) {
    const int na = 128;
    radial([&](double r, double wr) {
      for (int k = 0; k < na; ++k) {
        const double phi = 2.0 * M_PI * k / na;
        q.offsets.push_back({r * std::cos(phi), r * std::sin(phi), 0.0});
        q.weights.push_back(wr * r * (2.0 * M_PI / na));
      }
    });
  } else {
    using GLp = boost::math::quadrature::gauss<double, 20>;
    const int na = 64;
    radial([&](double r, double wr) {
      const auto& x = GLp::abscissa();
      const auto& w = GLp::weights();
      for (std::size_t k = 0; k < x.size(); ++k) {
        const int signs = (x[k] == 0.0) ? 1 : 2;
        for (int s = 0; s < signs; ++s) {
          const double ct = (s == 0 ? 1.0 : -1.0) * x[k];
          const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
          for (int m = 0; m < na; ++m) {
            const double phi = 2.0 * M_PI * m / na;
            q.offsets.push_back({r * st * std::cos(phi), r * st * std::sin(phi), r * ct});
            q.weights.push_back(wr * r * r * w[k] * (2.0 * M_PI / na));
          }
        }
      }
    });
  }
  return q;
}

/// (avg_{B_R(x)} w^alpha) * (avg_{B_R(x)} w^{-alpha q/p})^{p/q}, q the conjugate exponent.
inline double ap_product(int d, const Point& x, double R, double alpha, double p, const BallQuadrature& quad) {
  const double beta = -alpha / (p - 1.0);  // -alpha q / p
  std::vector<double> a1(quad.weights.size());
  std::vector<double> a2(quad.weights.size());
  for (std::size_t k = 0; k < quad.weights.size(); ++k) {
    Point y{x[0] + quad.offsets[k][0], x[1] + quad.offsets[k][1], d == 3 ? x[2] + quad.offsets[k][2] : 0.0};
    const double w = weight(y, d);
    a1[k] = quad.weights[k] * std::pow(w, alpha);
    a2[k] = quad.weights[k] * std::pow(w, beta);
  }
  const double vol = pairwise_sum(quad.weights);
  const double avg1 = pairwise_sum(a1) / vol;
  const double avg2 = pairwise_sum(a2) / vol;
  return avg1 * std::pow(avg2, p - 1.0);
}

struct ApOptions {
  int d = 2;
  double box = 6.0;  ///< centres drawn from [-box, box]^d
  double r_min = 0.1;
  double r_max = 10.0;
  std::uint64_t seed = 20240601;
};

struct ApReport {
  double max_product = 0.0;
  double min_product = 0.0;
  int samples = 0;
};

/// Worst sampled A_p product over balls with random centres and log-uniform radii.
inline ApReport ap_check(double alpha, double p, int samples, const ApOptions& opt = {}) {
  require(samples >= 10, ErrorCode::invalid_argument, "ap_check needs at least 10 samples");
  require(p > 1.0, ErrorCode::invalid_argument, "ap_check needs p > 1");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> centre(-opt.box, opt.box);
  std::uniform_real_distribution<double> logr(std::log(opt.r_min), std::log(opt.r_max));
  ApReport rep;
  rep.samples = samples;
  rep.min_product = INFINITY;
  for (int s = 0; s < samples; ++s) {
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < opt.d; ++a) x[a] = centre(rng);
    const double R = std::exp(logr(rng));
    const auto quad = make_ball_quadrature(opt.d, R);
    const double prod = ap_product(opt.d, x, R, alpha, p, quad);
    rep.max_product = std::max(rep.max_product, prod);
    rep.min_product = std::min(rep.min_product, prod);
  }
  return rep;
}

}  // namespace lagflow
