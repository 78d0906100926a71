#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "lagflow/error.hpp"
#include "lagflow/field.hpp"
#include "lagflow/field_io.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/parallel.hpp"
#include "lagflow/potential.hpp"

namespace lagflow {

// ---------------------------------------------------------------------------
// Forcing.

enum class ForcingKind { zero, solenoidal_gaussian, time_modulated, directory };

inline const char* to_string(ForcingKind k) {
  switch (k) {
    case ForcingKind::zero: return "zero";
    case ForcingKind::solenoidal_gaussian: return "solenoidal_gaussian";
    case ForcingKind::time_modulated: return "time_modulated";
    case ForcingKind::directory: return "directory";
  }
  return "?";
}

inline ForcingKind forcing_kind_from(const std::string& s) {
  if (s == "zero") return ForcingKind::zero;
  if (s == "solenoidal_gaussian") return ForcingKind::solenoidal_gaussian;
  if (s == "time_modulated") return ForcingKind::time_modulated;
  if (s == "directory") return ForcingKind::directory;
  throw Error(ErrorCode::config_invalid, "forcing.kind: unknown forcing family '" + s + "'");
}

/// Deterministic G(t, x). The Gaussian families are G = a(t) (d_2 psi, -d_1 psi[, 0])
/// with psi = A exp(-|x - c|^2 / (2 s^2)) and a(t) = 1 or cos(omega t). A directory
/// holds G_0000.lgfd, G_0001.lgfd, ... and times.txt; G is linear in t between
/// entries and constant outside.
struct ForcingSpec {
  ForcingKind kind = ForcingKind::zero;
  double amplitude = 0.0;
  double width = 0.5;
  Point centre{0.0, 0.0, 0.0};
  double omega = 0.0;
  std::filesystem::path directory;
  double divergence_tolerance = 1e-3;  ///< sup |div_h G| / sup |grad G|

  std::vector<double> times;
  std::vector<Field> series;
  std::vector<Field> series_grad;

  bool is_zero() const { return kind == ForcingKind::zero || (kind != ForcingKind::directory && amplitude == 0.0); }

  double modulation(double t) const { return kind == ForcingKind::time_modulated ? std::cos(omega * t) : 1.0; }

  /// Value and Jacobian ((i, j) = d_j G^i) at one point.
  void evaluate(double t, const Point& x, int d, std::array<double, 3>& G, Mat3& J) const {
    G = {0.0, 0.0, 0.0};
    J = Mat3{};
    if (is_zero()) return;
    if (kind == ForcingKind::directory) {
      evaluate_series(t, x, d, G, J);
      return;
    }
    const double s2 = width * width;
    std::array<double, 3> y{0.0, 0.0, 0.0};
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      y[a] = x[a] - centre[a];
      r2 += y[a] * y[a];
    }
    const double psi = amplitude * modulation(t) * std::exp(-0.5 * r2 / s2);
    auto dpsi = [&](int k) { return -y[k] / s2 * psi; };
    auto d2psi = [&](int k, int j) { return (y[k] * y[j] / (s2 * s2) - (k == j ? 1.0 / s2 : 0.0)) * psi; };
    G[0] = dpsi(1);
    G[1] = -dpsi(0);
    for (int j = 0; j < d; ++j) {
      J[0][j] = d2psi(1, j);
      J[1][j] = -d2psi(0, j);
    }
  }

  Field field(const GridSpec& g, double t) const {
    return Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> out) {
      std::array<double, 3> G;
      Mat3 J;
      evaluate(t, x, g.d, G, J);
      for (int a = 0; a < g.d; ++a) out[static_cast<std::size_t>(a)] = G[a];
    });
  }

  void load(const GridSpec& g) {
    if (kind != ForcingKind::directory) return;
    const auto tpath = directory / "times.txt";
    if (!std::filesystem::exists(tpath)) throw Error(ErrorCode::missing_artifact, "forcing times file missing: " + tpath.string());
    std::ifstream in(tpath);
    times.clear();
    for (double t; in >> t;) times.push_back(t);
    require(!times.empty(), ErrorCode::config_invalid, "forcing.directory: times.txt lists no times");
    require(std::is_sorted(times.begin(), times.end()), ErrorCode::config_invalid, "forcing.directory: times not sorted");
    series.clear();
    series_grad.clear();
    for (std::size_t k = 0; k < times.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "G_%04zu.lgfd", k);
      Field f = io::read_binary(directory / name);
      require(f.grid() == g && f.rank() == Rank::vector, ErrorCode::config_invalid,
              std::string("forcing.directory: ") + name + " is not a vector field on the run grid");
      series_grad.push_back(gradient4(f));
      series.push_back(std::move(f));
    }
  }

  /// Checks sup |div_h G(t_k)| <= tolerance sup |grad G(t_k)| at every mesh time.
  void validate(const GridSpec& g, std::span<const double> mesh) const {
    if (is_zero()) return;
    require(width > 0.0 || kind == ForcingKind::directory, ErrorCode::config_invalid, "forcing.width must be positive");
    for (double t : mesh) {
      const Field G = kind == ForcingKind::directory ? interpolate_series(t) : field(g, t);
      const Field J = gradient4(G);
      Field div(g, Rank::scalar);
      for (std::size_t q = 0; q < g.points(); ++q)
        for (int a = 0; a < g.d; ++a) div(0, q) += J(a * g.d + a, q);
      const double scale = J.max_abs();
      if (scale == 0.0) continue;
      const double ratio = div.max_abs() / scale;
      if (ratio > divergence_tolerance) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "forcing: relative divergence %.3e exceeds tolerance %.3e at t = %.6g", ratio,
                      divergence_tolerance, t);
        throw Error(ErrorCode::config_invalid, buf);
      }
    }
  }

 private:
  std::pair<std::size_t, double> bracket(double t) const {
    if (times.size() == 1 || t <= times.front()) return {0, 0.0};
    if (t >= times.back()) return {times.size() - 2, 1.0};
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
    return {k, (t - times[k]) / (times[k + 1] - times[k])};
  }

  Field interpolate_series(double t) const {
    require(!series.empty(), ErrorCode::missing_artifact, "forcing series not loaded");
    if (series.size() == 1) return series.front();
    const auto [k, a] = bracket(t);
    return (1.0 - a) * series[k] + a * series[k + 1];
  }

  void evaluate_series(double t, const Point& x, int d, std::array<double, 3>& G, Mat3& J) const {
    require(!series.empty(), ErrorCode::missing_artifact, "forcing series not loaded");
    std::size_t k = 0;
    double a = 0.0;
    if (series.size() > 1) std::tie(k, a) = bracket(t);
    const std::size_t k1 = series.size() > 1 ? k + 1 : k;
    const auto g0 = sample(series[k], x), g1 = sample(series[k1], x);
    const auto j0 = sample(series_grad[k], x), j1 = sample(series_grad[k1], x);
    for (int i = 0; i < d; ++i) {
      G[i] = (1.0 - a) * g0.values[static_cast<std::size_t>(i)] + a * g1.values[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j)
        J[i][j] = (1.0 - a) * j0.values[static_cast<std::size_t>(i * d + j)] + a * j1.values[static_cast<std::size_t>(i * d + j)];
    }
  }
};

// ---------------------------------------------------------------------------
// Momenta.

struct MomentumFields {
  Field g;  ///< vector, on labels
  Field h;  ///< matrix, (i, j) entry
};

inline MomentumFields initial_momentum(const Field& u0) {
  return MomentumFields{u0, gradient4(u0)};
}

/// g += dt (grad eta)^T G(t, eta) and h += dt (grad eta)^T grad G(t, eta) grad eta,
/// per label; left-endpoint rule.
inline void accumulate_momentum(MomentumFields& m, const FlowState& s, const Field& grad_eta, const ForcingSpec& G,
                                double t, double dt) {
  if (G.is_zero()) return;
  const GridSpec& g = s.grid;
  const int d = g.d;
  for (std::size_t q = 0; q < g.points(); ++q) {
    std::array<double, 3> Gv;
    Mat3 GJ;
    G.evaluate(t, s.eta_label(q), d, Gv, GJ);
    const Mat3 E = detail::matrix_at(grad_eta, q);
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += E[i][j] * Gv[i];
      m.g(j, q) += dt * acc;
    }
    Mat3 GE{};
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) GE[i][k] += GJ[i][l] * E[l][k];
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) acc += E[i][j] * GE[i][k];
        m.h(j * d + k, q) += dt * acc;
      }
  }
}

/// phi(z) = grad kappa(z)^T h(kappa(z)) grad kappa(z).
inline Field phi(const FlowState& s, const Field& h) {
  const GridSpec& g = s.grid;
  const int d = g.d;
  Field out(g, Rank::matrix);
  for (std::size_t q = 0; q < g.points(); ++q) {
    const auto hs = sample_cubic(h, s.kappa_label(q));
    const Mat3 K = detail::matrix_at(s.grad_kappa, q);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) acc += K[i][a] * hs.values[static_cast<std::size_t>(i * d + j)] * K[j][b];
        out(a * d + b, q) = acc;
      }
  }
  return out;
}

/// phi - phi^T, computed as grad kappa^T (h - h^T)(kappa) grad kappa so a symmetric
/// part of h never enters.
inline Field phi_antisymmetric(const FlowState& s, const Field& h) {
  const GridSpec& g = s.grid;
  const int d = g.d;
  Field out(g, Rank::matrix);
  for (std::size_t q = 0; q < g.points(); ++q) {
    const auto hs = sample_cubic(h, s.kappa_label(q));
    Mat3 A{};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        A[i][j] = hs.values[static_cast<std::size_t>(i * d + j)] - hs.values[static_cast<std::size_t>(j * d + i)];
    const Mat3 K = detail::matrix_at(s.grad_kappa, q);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) acc += K[i][a] * A[i][j] * K[j][b];
        out(a * d + b, q) = acc;
      }
  }
  return out;
}

/// K^j = sum_i T_i A_{ji} for an antisymmetric matrix field A = phi - phi^T.
inline Field kernel_from_antisymmetric(const Field& A) {
  require(A.rank() == Rank::matrix, ErrorCode::invalid_argument, "kernel needs a matrix field");
  const GridSpec& g = A.grid();
  const int d = g.d;
  Field out(g, Rank::vector);
  for (int j = 0; j < d; ++j) {
    std::vector<Field> f;
    for (int i = 0; i < d; ++i) f.push_back(component_field(A, j * d + i));
    const Field kj = t_sum(f);
    std::copy(kj.values().begin(), kj.values().end(), out.component(j).begin());
  }
  return out;
}

/// One sample's K_{eta,h}.
inline Field kernel_K(const FlowState& s, const Field& h) { return kernel_from_antisymmetric(phi_antisymmetric(s, h)); }

/// Pointwise mean over samples. The first sample is the reference and the mean is
/// ref + (sum of deviations) / M with a fixed pairwise order, so identical samples
/// return the reference bitwise.
inline Field expect_over_ensemble(std::span<const Field> samples) {
  if (samples.empty()) throw Error(ErrorCode::empty_ensemble, "expectation over an empty ensemble");
  const Field& ref = samples.front();
  for (const Field& f : samples)
    require(ref.compatible(f), ErrorCode::invalid_argument, "ensemble samples differ in grid or rank");
  if (samples.size() == 1) return ref;
  Field out = ref;
  const std::size_t M = samples.size();
  std::vector<double> dev(M);
  auto vals = ref.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t m = 0; m < M; ++m) dev[m] = samples[m].values()[i] - vals[i];
    const double s = pairwise_sum(dev);
    if (s != 0.0) out.values()[i] = vals[i] + s / static_cast<double>(M);
  }
  return out;
}

/// grad kappa(z)^T g(kappa(z)): the pullback whose projection is the velocity.
inline Field pullback(const FlowState& s, const Field& g_field) {
  const GridSpec& g = s.grid;
  const int d = g.d;
  Field out(g, Rank::vector);
  for (std::size_t q = 0; q < g.points(); ++q) {
    const auto gs = sample_cubic(g_field, s.kappa_label(q));
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += s.grad_kappa(i * d + j, q) * gs.values[static_cast<std::size_t>(i)];
      out(j, q) = acc;
    }
  }
  return out;
}

enum class VelocityForm {
  curl,       ///< S through the curl of the pullback
  projected,  ///< S = v - G(v) with the configured projection
};

inline Field apply_solenoidal(const Field& v, VelocityForm form, ProjectionMethod method = ProjectionMethod::quadrature) {
  return form == VelocityForm::curl ? solenoidal_curl(v) : solenoidal(v, method);
}

struct VelocityField {
  Field u;
  double divergence_ratio = 0.0;  ///< sup |div_h u| / sup |grad_h u|, interior
};

inline double divergence_ratio(const Field& u) {
  const double scale = sup_norm(gradient(u));
  if (scale == 0.0) return 0.0;
  return sup_norm_interior(divergence(u)) / scale;
}

/// u = E S[(grad kappa)^T g(kappa)]; S is linear, so the mean pullback is projected once.
inline VelocityField recover_velocity(std::span<const FlowState> states, std::span<const MomentumFields> momenta,
                                      VelocityForm form = VelocityForm::curl) {
  if (states.empty()) throw Error(ErrorCode::empty_ensemble, "recover_velocity needs at least one sample");
  require(states.size() == momenta.size(), ErrorCode::invalid_argument, "states and momenta differ in count");
  std::vector<Field> pulled;
  for (std::size_t m = 0; m < states.size(); ++m) {
    throw_if_invalid(states[m]);
    pulled.push_back(pullback(states[m], momenta[m].g));
  }
  VelocityField r;
  r.u = apply_solenoidal(expect_over_ensemble(pulled), form);
  r.divergence_ratio = divergence_ratio(r.u);
  return r;
}

}  // namespace lagflow
