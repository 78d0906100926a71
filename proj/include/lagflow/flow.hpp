#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagflow/brownian.hpp"
#include "lagflow/error.hpp"
#include "lagflow/field.hpp"
#include "lagflow/sobolev.hpp"

namespace lagflow {

namespace detail {

inline double det(const Mat3& a, int d) {
  if (d == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

inline Mat3 inverse(const Mat3& a, int d) {
  const double D = det(a, d);
  Mat3 r{};
  if (d == 2) {
    r[0][0] = a[1][1] / D;
    r[0][1] = -a[0][1] / D;
    r[1][0] = -a[1][0] / D;
    r[1][1] = a[0][0] / D;
    return r;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
      r[i][j] = (a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1]) / D;
    }
  return r;
}

inline Mat3 matrix_at(const Field& m, std::size_t q) {
  const int d = m.grid().d;
  Mat3 a{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a[i][j] = m(i * d + j, q);
  return a;
}

}  // namespace detail

/// Thresholds from the existence proof: |zeta(t, 0)| <= 1/2 and |grad zeta|_inf <= 1/(2d).
inline constexpr double kOriginGuard = 0.5;
inline double gradient_guard(int d) { return 1.0 / (2.0 * d); }

/// Lower bound on det(I + A) when every |A_ij| <= 1/(2d) (Ostrowski): each row has
/// diagonal >= 1 - 1/(2d) and off-diagonal sum <= (d - 1)/(2d).
inline double ostrowski_floor(int d) { return std::pow(0.5, d); }

inline constexpr double kInversionTolerance = 1e-10;  ///< residual, times L
inline constexpr int kInversionMaxIterations = 50;

struct FlowMonitor {
  double grad_zeta_sup = 0.0;
  double zeta_origin = 0.0;
  int boundary_exits = 0;  ///< particles whose drift was sampled outside the box
  bool valid = true;
};

/// One Brownian sample's flow at one mesh time. Labels are grid points x;
/// eta(x) = x + epsilon B_t + zeta(x), kappa stored as kappa(x) - x.
struct FlowState {
  GridSpec grid{};
  double t = 0.0;
  std::array<double, 3> shift{0.0, 0.0, 0.0};  ///< epsilon B_t
  double lambda = 1.0;
  Field zeta;
  Field grad_zeta;   ///< (i, j) = d_j zeta^i
  Field kappa;       ///< kappa - id
  Field grad_kappa;  ///< full Jacobian of kappa
  FlowMonitor monitor;

  Point eta_label(std::size_t q) const {
    Point x = grid.point(q);
    for (int a = 0; a < grid.d; ++a) x[a] += shift[a] + zeta(a, q);
    return x;
  }
  /// eta at an arbitrary label y, with zeta interpolated.
  Point eta_at(const Point& y) const {
    const auto z = sample_cubic(zeta, y);
    Point x = y;
    for (int a = 0; a < grid.d; ++a) x[a] += shift[a] + z.values[static_cast<std::size_t>(a)];
    return x;
  }
  Point kappa_label(std::size_t q) const {
    Point x = grid.point(q);
    for (int a = 0; a < grid.d; ++a) x[a] += kappa(a, q);
    return x;
  }
};

/// Recomputes grad zeta and the guard monitor; marks the state invalid past 1/(2d).
inline void refresh_monitor(FlowState& s) {
  s.grad_zeta = gradient4(s.zeta);
  s.monitor.grad_zeta_sup = s.grad_zeta.max_abs();
  const auto z0 = sample(s.zeta, Point{0.0, 0.0, 0.0});
  double r2 = 0.0;
  for (int a = 0; a < s.grid.d; ++a) r2 += z0.values[static_cast<std::size_t>(a)] * z0.values[static_cast<std::size_t>(a)];
  s.monitor.zeta_origin = std::sqrt(r2);
  s.monitor.valid = s.zeta.all_finite() && s.monitor.grad_zeta_sup <= gradient_guard(s.grid.d);
}

/// Identity flow at t = 0.
inline FlowState initial_flow(const GridSpec& g) {
  g.validate();
  FlowState s;
  s.grid = g;
  s.zeta = Field(g, Rank::vector);
  s.kappa = Field(g, Rank::vector);
  s.grad_zeta = Field(g, Rank::matrix);
  s.grad_kappa = Field(g, Rank::matrix);
  for (std::size_t q = 0; q < g.points(); ++q)
    for (int a = 0; a < g.d; ++a) s.grad_kappa(a * g.d + a, q) = 1.0;
  return s;
}

inline void throw_if_invalid(const FlowState& s) {
  if (s.monitor.valid) return;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "|grad zeta|_inf = %.6g exceeds 1/(2d) = %.6g at t = %.6g", s.monitor.grad_zeta_sup,
                gradient_guard(s.grid.d), s.t);
  throw Error(ErrorCode::diffeo_violation, buf);
}

/// One explicit Euler step zeta <- zeta + dt drift(eta). next_shift and next_lambda
/// are epsilon B and lambda at the new mesh time. The drift is sampled at the
/// current particle positions. Throws diffeo-violation when the new state breaks the
/// 1/(2d) guard (the returned state would be invalid).
inline FlowState advance_flow(const FlowState& s, const Field& drift, const std::array<double, 3>& next_shift,
                              double next_lambda, double dt) {
  throw_if_invalid(s);
  require(drift.rank() == Rank::vector && drift.grid() == s.grid, ErrorCode::invalid_argument,
          "drift must be a vector field on the flow grid");
  require(drift.all_finite(), ErrorCode::invalid_argument, "drift has non-finite values");
  FlowState n = s;
  n.t = s.t + dt;
  n.shift = next_shift;
  n.lambda = next_lambda;
  int exits = 0;
  for (std::size_t q = 0; q < s.grid.points(); ++q) {
    const auto v = sample_cubic(drift, s.eta_label(q));
    exits += v.clamped ? 1 : 0;
    for (int a = 0; a < s.grid.d; ++a) n.zeta(a, q) += dt * v.values[static_cast<std::size_t>(a)];
  }
  n.monitor.boundary_exits = exits;
  refresh_monitor(n);
  throw_if_invalid(n);
  return n;
}

struct InversionResult {
  Point label{};
  double residual = 0.0;
  int iterations = 0;
};

/// Solves eta(y) = x by Newton on the interpolated zeta, falling back to the
/// contraction y <- x - epsilon B - zeta(y) whenever a Newton step does not reduce
/// the residual.
inline InversionResult invert_point(const FlowState& s, const Point& x, const Point& seed) {
  const int d = s.grid.d;
  const double tol = kInversionTolerance * s.grid.L;
  InversionResult r;
  Point y = seed;
  auto residual = [&](const Point& yy, std::array<double, 3>& res) {
    const Point e = s.eta_at(yy);
    double m = 0.0;
    for (int a = 0; a < d; ++a) {
      res[a] = e[a] - x[a];
      m = std::max(m, std::abs(res[a]));
    }
    return m;
  };
  std::array<double, 3> res{};
  double err = residual(y, res);
  int it = 0;
  while (err > tol && it < kInversionMaxIterations) {
    ++it;
    const auto sg = sample_with_gradient(s.zeta, y);
    Mat3 J{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) J[i][j] = (i == j ? 1.0 : 0.0) + sg.jacobian[i][j];
    const Mat3 Ji = detail::inverse(J, d);
    Point trial = y;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) trial[i] -= Ji[i][j] * res[j];
    std::array<double, 3> tres{};
    double terr = residual(trial, tres);
    if (!(terr < err)) {
      trial = y;
      for (int i = 0; i < d; ++i) trial[i] -= res[i];
      terr = residual(trial, tres);
    }
    y = trial;
    res = tres;
    err = terr;
  }
  r.label = y;
  r.residual = err;
  r.iterations = it;
  return r;
}

/// Fills s.kappa on every grid point; seeds at x - epsilon B - zeta(x).
inline void invert_flow(FlowState& s) {
  throw_if_invalid(s);
  const GridSpec& g = s.grid;
  double worst = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    const Point x = g.point(q);
    Point seed = x;
    for (int a = 0; a < g.d; ++a) seed[a] -= s.shift[a] + s.zeta(a, q);
    const auto r = invert_point(s, x, seed);
    worst = std::max(worst, r.residual);
    for (int a = 0; a < g.d; ++a) s.kappa(a, q) = r.label[a] - x[a];
  }
  if (worst > kInversionTolerance * g.L) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "flow inversion residual %.3e after %d iterations at t = %.6g", worst,
                  kInversionMaxIterations, s.t);
    throw Error(ErrorCode::no_convergence, buf);
  }
}

/// grad kappa(x) = (I + grad zeta)^{-1} evaluated at kappa(x). Returns grad eta on
/// the label grid. Throws singular-jacobian below the Ostrowski floor.
inline Field jacobians(FlowState& s) {
  throw_if_invalid(s);
  const GridSpec& g = s.grid;
  const int d = g.d;
  Field grad_eta = s.grad_zeta;
  for (std::size_t q = 0; q < g.points(); ++q)
    for (int a = 0; a < d; ++a) grad_eta(a * d + a, q) += 1.0;
  const double floor = ostrowski_floor(d);
  for (std::size_t q = 0; q < g.points(); ++q) {
    const auto gz = sample_cubic(s.grad_zeta, s.kappa_label(q));
    Mat3 J{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) J[i][j] = (i == j ? 1.0 : 0.0) + gz.values[static_cast<std::size_t>(i * d + j)];
    const double D = detail::det(J, d);
    if (!(D >= floor)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "det grad eta = %.6g below the floor %.6g at t = %.6g", D, floor, s.t);
      throw Error(ErrorCode::singular_jacobian, buf);
    }
    const Mat3 Ji = detail::inverse(J, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s.grad_kappa(i * d + j, q) = Ji[i][j];
  }
  return grad_eta;
}

/// max_x |kappa(eta(x)) - x|, with kappa evaluated by inversion at eta(x).
inline double round_trip_error(const FlowState& s) {
  double worst = 0.0;
  for (std::size_t q = 0; q < s.grid.points(); ++q) {
    const Point x = s.grid.point(q);
    const Point e = s.eta_label(q);
    Point seed = e;
    for (int a = 0; a < s.grid.d; ++a) seed[a] -= s.shift[a] + s.zeta(a, q);
    const auto r = invert_point(s, e, seed);
    for (int a = 0; a < s.grid.d; ++a) worst = std::max(worst, std::abs(r.label[a] - x[a]));
  }
  return worst;
}

/// max |grad kappa - I| entrywise.
inline double kappa_identity_deviation(const FlowState& s) {
  const int d = s.grid.d;
  double m = 0.0;
  for (std::size_t q = 0; q < s.grid.points(); ++q)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m = std::max(m, std::abs(s.grad_kappa(i * d + j, q) - (i == j ? 1.0 : 0.0)));
  return m;
}

/// max over the grid of w(eta(x)) / w(x).
inline double weight_ratio(const FlowState& s) {
  double m = 0.0;
  for (std::size_t q = 0; q < s.grid.points(); ++q)
    m = std::max(m, weight(s.eta_label(q), s.grid.d) / weight(s.grid.point(q), s.grid.d));
  return m;
}

/// Under both guards |eta(x) - x| <= lambda - 1 + 1/2 + |x|/2, so w(eta)/w <= 3 lambda.
inline constexpr double kWeightComparability = 3.0;

// ---------------------------------------------------------------------------
// Growth monitor.

struct GrowthSample {
  double t = 0.0;
  double lambda = 1.0;
  std::vector<double> raw;     ///< weighted quantities
  std::vector<double> ratios;  ///< raw / (t lambda^power); 0 at t = 0
};

struct GrowthReport {
  std::vector<std::string> names;
  std::vector<double> powers;
  std::vector<GrowthSample> series;
  std::vector<bool> drifting;  ///< per quantity
  bool any_drift = false;
};

inline constexpr double kDriftFactor = 1.25;

/// Names and lambda powers of the monitored quantities for l derivative orders.
inline void growth_layout(const NormSpec& spec, int d, std::vector<std::string>& names, std::vector<double>& powers) {
  const double sigma = spec.space.theta - static_cast<double>(d) / spec.p;
  names = {"sup w^(s-1) zeta", "Lp w^(s-1) zeta"};
  powers = {sigma - 1.0, sigma - 1.0};
  for (int k = 1; k <= spec.l; ++k) {
    names.push_back("Lp w^(s+" + std::to_string(k - 1) + ") D^" + std::to_string(k) + " zeta");
    powers.push_back(sigma + k - 1.0);
  }
  for (int k = 1; k <= spec.l; ++k) {
    names.push_back("Lp w^(s+" + std::to_string(k) + ") D^" + std::to_string(k) + " grad kappa");
    powers.push_back(sigma + k);
  }
}

/// One row of the monitor for a state whose kappa and grad kappa are current.
inline GrowthSample growth_sample(const FlowState& s, const NormSpec& spec) {
  const int d = s.grid.d;
  const double sigma = spec.space.theta - static_cast<double>(d) / spec.p;
  std::vector<std::string> names;
  std::vector<double> powers;
  growth_layout(spec, d, names, powers);
  GrowthSample row;
  row.t = s.t;
  row.lambda = s.lambda;
  row.raw.push_back(weighted_sup_norm(s.zeta, sigma - 1.0));
  row.raw.push_back(weighted_lp_norm(s.zeta, sigma - 1.0, spec.p));
  for (int k = 1; k <= spec.l; ++k)
    row.raw.push_back(weighted_lp_norm(derivative_magnitude(s.zeta, k), sigma + k - 1.0, spec.p));
  Field dk = s.grad_kappa;
  for (std::size_t q = 0; q < s.grid.points(); ++q)
    for (int a = 0; a < d; ++a) dk(a * d + a, q) -= 1.0;  // derivatives of I vanish anyway
  for (int k = 1; k <= spec.l; ++k) row.raw.push_back(weighted_lp_norm(derivative_magnitude(dk, k), sigma + k, spec.p));
  for (std::size_t i = 0; i < row.raw.size(); ++i)
    row.ratios.push_back(s.t > 0.0 ? row.raw[i] / (s.t * std::pow(s.lambda, powers[i])) : 0.0);
  return row;
}

/// Flags a quantity whose t-normalised ratio grows by more than kDriftFactor between
/// the first and last positive-time rows.
inline void finalize_growth(GrowthReport& r) {
  const std::size_t nq = r.names.size();
  r.drifting.assign(nq, false);
  r.any_drift = false;
  const GrowthSample* first = nullptr;
  const GrowthSample* last = nullptr;
  for (const auto& row : r.series)
    if (row.t > 0.0) {
      if (!first) first = &row;
      last = &row;
    }
  if (!first || first == last) return;
  for (std::size_t i = 0; i < nq; ++i) {
    const double a = first->ratios[i], b = last->ratios[i];
    if (a > 1e-300 && b > kDriftFactor * a) r.drifting[i] = true;
    r.any_drift = r.any_drift || r.drifting[i];
  }
}

inline GrowthReport make_growth_report(const NormSpec& spec, int d) {
  GrowthReport r;
  growth_layout(spec, d, r.names, r.powers);
  return r;
}

inline void to_json(nlohmann::json& j, const GrowthReport& r) {
  j = nlohmann::json::object();
  j["names"] = r.names;
  j["powers"] = r.powers;
  j["drifting"] = r.drifting;
  j["any_drift"] = r.any_drift;
  auto& rows = j["series"] = nlohmann::json::array();
  for (const auto& s : r.series) rows.push_back({{"t", s.t}, {"lambda", s.lambda}, {"raw", s.raw}, {"ratios", s.ratios}});
}

}  // namespace lagflow
