#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "lagflow/brownian.hpp"
#include "lagflow/error.hpp"
#include "lagflow/field.hpp"
#include "lagflow/parallel.hpp"

// Closed-form solutions and brute-force evaluators. Nothing here calls the
// potential, flow or solver code.
namespace lagflow::reference {

/// u(t, x) with its analytic Jacobian (entry (i, j) = d_j u^i).
struct OracleSolution {
  std::string name;
  int d = 2;
  double nu = 0.0;
  std::string notes;
  std::function<void(double, const Point&, std::span<double>)> velocity;
  std::function<void(double, const Point&, std::span<double>)> jacobian;

  Field field(const GridSpec& g, double t) const {
    return Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> out) { velocity(t, x, out); });
  }
  Field gradient_field(const GridSpec& g, double t) const {
    return Field::from_function(g, Rank::matrix, [&](const Point& x, std::span<double> out) { jacobian(t, x, out); });
  }
};

namespace detail {

/// Planar rotational field u = f(r^2) (-y, x) about c; f and f' = df/d(r^2) given.
template <class F, class DF>
OracleSolution swirl(std::string name, double nu, std::string notes, Point c, F f, DF df) {
  OracleSolution s;
  s.name = std::move(name);
  s.d = 2;
  s.nu = nu;
  s.notes = std::move(notes);
  s.velocity = [=](double t, const Point& x, std::span<double> u) {
    const double X = x[0] - c[0], Y = x[1] - c[1];
    const double a = f(t, X * X + Y * Y);
    u[0] = -Y * a;
    u[1] = X * a;
  };
  s.jacobian = [=](double t, const Point& x, std::span<double> J) {
    const double X = x[0] - c[0], Y = x[1] - c[1];
    const double r2 = X * X + Y * Y;
    const double a = f(t, r2);
    const double b = 2.0 * df(t, r2);
    J[0] = -Y * b * X;
    J[1] = -a - Y * b * Y;
    J[2] = a + X * b * X;
    J[3] = X * b * Y;
  };
  return s;
}

/// (1 - exp(-s)) / s and its derivative, stable near s = 0.
inline double one_minus_exp_over(double s) { return s < 1e-6 ? 1.0 - 0.5 * s + s * s / 6.0 : -std::expm1(-s) / s; }
inline double d_one_minus_exp_over(double s) {
  if (s < 1e-4) return -0.5 + s / 3.0 - s * s / 8.0;
  return (std::exp(-s) * s + std::expm1(-s)) / (s * s);
}

}  // namespace detail

/// Lamb-Oseen vortex: u_theta = Gamma0 / (2 pi r) (1 - exp(-r^2 / (4 nu (t + t0)))).
inline OracleSolution lamb_oseen(double circulation, double t0, double nu, Point centre = {0.0, 0.0, 0.0}) {
  require(nu > 0.0 && t0 > 0.0, ErrorCode::invalid_argument, "lamb_oseen needs nu > 0 and t0 > 0");
  const double G = circulation;
  auto f = [=](double t, double r2) {
    const double a = 4.0 * nu * (t + t0);
    return G / (2.0 * std::numbers::pi * a) * detail::one_minus_exp_over(r2 / a);
  };
  auto df = [=](double t, double r2) {
    const double a = 4.0 * nu * (t + t0);
    return G / (2.0 * std::numbers::pi * a * a) * detail::d_one_minus_exp_over(r2 / a);
  };
  return detail::swirl("lamb_oseen", nu, "Gaussian vorticity, velocity decays like 1/r", centre, f, df);
}

/// Core radius (4 nu (t + t0))^{1/2} of the Lamb-Oseen vortex.
inline double lamb_oseen_core(double t, double t0, double nu) { return std::sqrt(4.0 * nu * (t + t0)); }

/// Superposed opposite-sign Lamb-Oseen vortices at +-separation/2 on the first axis.
/// Decays like 1/r^2; not an exact solution for t > 0 (the vortices interact).
inline OracleSolution vortex_pair(double circulation, double t0, double nu, double separation) {
  const auto a = lamb_oseen(circulation, t0, nu, {-0.5 * separation, 0.0, 0.0});
  const auto b = lamb_oseen(-circulation, t0, nu, {0.5 * separation, 0.0, 0.0});
  OracleSolution s;
  s.name = "vortex_pair";
  s.nu = nu;
  s.notes = "zero net circulation; initial data only";
  s.velocity = [=](double t, const Point& x, std::span<double> u) {
    double ua[2], ub[2];
    a.velocity(t, x, ua);
    b.velocity(t, x, ub);
    u[0] = ua[0] + ub[0];
    u[1] = ua[1] + ub[1];
  };
  s.jacobian = [=](double t, const Point& x, std::span<double> J) {
    double ja[4], jb[4];
    a.jacobian(t, x, ja);
    b.jacobian(t, x, jb);
    for (int k = 0; k < 4; ++k) J[k] = ja[k] + jb[k];
  };
  return s;
}

enum class VortexProfile {
  gaussian_vorticity,  ///< Lamb-Oseen shape frozen in time
  shielded,            ///< u_theta = A r exp(-r^2 / R^2), zero net circulation
};

/// Time-independent radial vortex; any radial profile is a steady Euler flow.
inline OracleSolution stationary_euler_vortex(VortexProfile profile, double amplitude, double radius) {
  require(radius > 0.0, ErrorCode::invalid_argument, "vortex radius must be positive");
  if (profile == VortexProfile::gaussian_vorticity) {
    const double a = radius * radius;
    auto f = [=](double, double r2) { return amplitude / (2.0 * std::numbers::pi * a) * detail::one_minus_exp_over(r2 / a); };
    auto df = [=](double, double r2) {
      return amplitude / (2.0 * std::numbers::pi * a * a) * detail::d_one_minus_exp_over(r2 / a);
    };
    return detail::swirl("euler_gaussian_vorticity", 0.0, "steady for epsilon = 0", {0.0, 0.0, 0.0}, f, df);
  }
  const double a = radius * radius;
  auto f = [=](double, double r2) { return amplitude * std::exp(-r2 / a); };
  auto df = [=](double, double r2) { return -amplitude / a * std::exp(-r2 / a); };
  return detail::swirl("euler_shielded", 0.0, "steady for epsilon = 0, Gaussian decay", {0.0, 0.0, 0.0}, f, df);
}

// ---------------------------------------------------------------------------
// Analytic test fields.

/// psi = A exp(-|x - c|^2 / (2 s^2)).
struct GaussianBump {
  double amplitude = 1.0;
  double width = 1.0;
  Point centre{0.0, 0.0, 0.0};

  double value(const Point& x, int d) const {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) r2 += (x[k] - centre[k]) * (x[k] - centre[k]);
    return amplitude * std::exp(-0.5 * r2 / (width * width));
  }
  /// d_k psi
  double grad(const Point& x, int d, int k) const { return -(x[k] - centre[k]) / (width * width) * value(x, d); }
  /// d_k d_j psi
  double hess(const Point& x, int d, int k, int j) const {
    const double s2 = width * width;
    const double yk = x[k] - centre[k], yj = x[j] - centre[j];
    return (yk * yj / (s2 * s2) - (k == j ? 1.0 / s2 : 0.0)) * value(x, d);
  }
};

/// Pure gradient field grad psi.
inline Field gradient_of(const GaussianBump& psi, const GridSpec& g) {
  return Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> v) {
    for (int k = 0; k < g.d; ++k) v[k] = psi.grad(x, g.d, k);
  });
}

/// Divergence-free field (d_2 psi, -d_1 psi[, 0]).
inline Field stream_field(const GaussianBump& psi, const GridSpec& g) {
  return Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> v) {
    v[0] = psi.grad(x, g.d, 1);
    v[1] = -psi.grad(x, g.d, 0);
  });
}

/// Jacobian of stream_field, entry (i, j) = d_j v^i.
inline Field stream_field_jacobian(const GaussianBump& psi, const GridSpec& g) {
  return Field::from_function(g, Rank::matrix, [&](const Point& x, std::span<double> J) {
    const int d = g.d;
    for (int j = 0; j < d; ++j) {
      J[0 * d + j] = psi.hess(x, d, 1, j);
      J[1 * d + j] = -psi.hess(x, d, 0, j);
    }
  });
}

/// Newton potential of the unit-mass Gaussian of standard deviation s in 3D:
/// -erf(r / (sqrt(2) s)) / (4 pi r).
inline double gaussian_potential_3d(double r, double s) {
  if (r < 1e-8 * s) return -1.0 / (std::pow(2.0 * std::numbers::pi, 1.5) * s);
  return -std::erf(r / (std::numbers::sqrt2 * s)) / (4.0 * std::numbers::pi * r);
}

inline double gaussian_density_3d(double r, double s) {
  return std::exp(-0.5 * r * r / (s * s)) / std::pow(2.0 * std::numbers::pi * s * s, 1.5);
}

// ---------------------------------------------------------------------------

struct Estimate {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation
  double ci_low = 0.0;
  double ci_high = 0.0;
  int samples = 0;
};

/// Mean, sample std and Student-t 95% interval of a scalar path functional,
/// evaluated independently per path.
template <class Functional>
Estimate brute_expectation(Functional&& functional, const BrownianEnsemble& ensemble, double level = 0.95) {
  const int M = ensemble.size();
  require(M >= 16, ErrorCode::invalid_argument, "brute_expectation needs M >= 16");
  std::vector<double> v(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) v[static_cast<std::size_t>(m)] = functional(ensemble, m);
  Estimate e;
  e.samples = M;
  e.mean = pairwise_sum(v) / M;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - e.mean) * (v[i] - e.mean);
  e.std = std::sqrt(pairwise_sum(dev) / (M - 1));
  const boost::math::students_t dist(M - 1);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - level)));
  const double half = q * e.std / std::sqrt(static_cast<double>(M));
  e.ci_low = e.mean - half;
  e.ci_high = e.mean + half;
  return e;
}

}  // namespace lagflow::reference
