#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <span>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagflow/brownian.hpp"
#include "lagflow/error.hpp"
#include "lagflow/field.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/lagrangian.hpp"
#include "lagflow/parallel.hpp"
#include "lagflow/potential.hpp"
#include "lagflow/sobolev.hpp"

namespace lagflow {

struct SolverConfig {
  SpaceParams space{};
  GridSpec grid{2, 2.0, 64};
  EnsembleSpec ensemble{};  ///< M, T, dt, epsilon, master_seed
  bool auto_horizon = false;
  double T_max = 1.0;
  int max_picard = 12;
  double tol_picard = 1e-9;
  int monitor_samples = 2;
  int workers = 0;  ///< 0: LAGFLOW_WORKERS or 1
  VelocityForm velocity_form = VelocityForm::curl;
  double cfl = 0.25;  ///< |u0|_inf dt <= cfl h
  int min_steps = 4;
  double divergence_tolerance = 1e-2;  ///< on u0, relative to |grad u0|_inf
  bool keep_sample_velocities = false;
  double horizon_safety = 0.5;
  double guard_origin = kOriginGuard;
  double guard_sobolev = 1.0;

  double epsilon() const { return ensemble.epsilon; }
  /// Derivative orders actually gated in the Cauchy norm and in guard (ii).
  int l_eff() const { return std::min(space.l, 2); }

  void validate() const {
    space.validate();
    grid.validate();
    if (space.d != grid.d) throw Error(ErrorCode::config_invalid, "space.d and grid.d differ");
    if (ensemble.M < 1) throw Error(ErrorCode::config_invalid, "ensemble.M must be >= 1");
    if (!(ensemble.epsilon >= 0.0)) throw Error(ErrorCode::config_invalid, "ensemble.epsilon must be >= 0");
    if (!(ensemble.dt > 0.0)) throw Error(ErrorCode::config_invalid, "ensemble.dt must be positive");
    if (!auto_horizon && !(ensemble.T > 0.0)) throw Error(ErrorCode::config_invalid, "ensemble.T must be positive");
    if (!(T_max > 0.0)) throw Error(ErrorCode::config_invalid, "solver.T_max must be positive");
    if (!(tol_picard > 0.0)) throw Error(ErrorCode::config_invalid, "solver.tol_picard must be positive");
    if (max_picard < 1) throw Error(ErrorCode::config_invalid, "solver.max_picard must be >= 1");
    if (monitor_samples < 1) throw Error(ErrorCode::config_invalid, "solver.monitor_samples must be >= 1");
  }
};

struct TimeMesh {
  double T = 0.0;
  int steps = 0;
  double dt = 0.0;
  std::vector<double> times;
};

/// steps = max(min_steps, ceil(T / dt), ceil(T |u|_inf / (cfl h))).
inline TimeMesh make_mesh(double T, double dt, double speed, const GridSpec& g, double cfl, int min_steps) {
  TimeMesh m;
  m.T = T;
  double steps = std::max<double>(min_steps, std::ceil(T / dt - 1e-9));
  if (speed > 0.0) steps = std::max(steps, std::ceil(T * speed / (cfl * g.h()) - 1e-9));
  m.steps = static_cast<int>(steps);
  m.dt = T / m.steps;
  for (int k = 0; k <= m.steps; ++k) m.times.push_back(k * m.dt);
  return m;
}

/// Guard quantities at one mesh time: |zeta(t, 0)| and |grad zeta|_inf over all
/// samples, |zeta|_{H^{l+1}_{theta+l,p}} and sum_k |w^k D^k grad kappa|_p over the
/// monitor samples.
struct GuardValues {
  double origin = 0.0;
  double gradient = 0.0;
  double sobolev = 0.0;
  double kappa = 0.0;
};

inline void to_json(nlohmann::json& j, const GuardValues& g) {
  j = {{"origin", g.origin}, {"gradient", g.gradient}, {"sobolev", g.sobolev}, {"kappa", g.kappa}};
}

struct IterationRecord {
  int iteration = 0;
  double cauchy = 0.0;       ///< sup over mesh times, gated norm
  double cauchy_full = 0.0;  ///< same at the configured l, reported only
  GuardValues guards;        ///< max over mesh times
  double seconds = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> rows;
  bool converged = false;
};

inline void to_json(nlohmann::json& j, const IterationTrace& t) {
  j = nlohmann::json::object();
  j["converged"] = t.converged;
  auto& rows = j["iterations"] = nlohmann::json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"iteration", r.iteration}, {"cauchy", r.cauchy}, {"cauchy_full", r.cauchy_full},
                    {"guards", r.guards}, {"seconds", r.seconds}});
}

struct FlowDiagnostics {
  double round_trip = 0.0;           ///< max |kappa(eta(x)) - x|
  double kappa_deviation = 0.0;      ///< max |grad kappa - I|
  double weight_ratio = 0.0;         ///< max w(eta(x)) / (w(x) lambda_t)
  double divergence = 0.0;           ///< max relative div of u(t)
  int boundary_exits = 0;            ///< max over samples and times
};

inline void to_json(nlohmann::json& j, const FlowDiagnostics& d) {
  j = {{"round_trip", d.round_trip}, {"kappa_deviation", d.kappa_deviation}, {"weight_ratio", d.weight_ratio},
       {"divergence", d.divergence}, {"boundary_exits", d.boundary_exits}};
}

/// Everything one Picard pass produces.
struct PassOutput {
  std::vector<Field> K;  ///< K_n(t_k) per mesh time
  std::vector<Field> u;  ///< velocity per mesh time
  std::vector<Field> final_sample_velocities;
  std::vector<std::vector<Field>> monitor_zeta;  ///< [monitor][k]
  std::vector<GuardValues> guards;               ///< per mesh time
  IterationRecord record;
  FlowDiagnostics diagnostics;
  GrowthReport growth;
  int completed_steps = 0;  ///< mesh times finished (probe mode may stop early)
  std::string stop_reason;
};

namespace detail {

inline double kappa_guard_sum(const FlowState& s, int l, double p) {
  const int d = s.grid.d;
  Field dk = s.grad_kappa;
  for (std::size_t q = 0; q < s.grid.points(); ++q)
    for (int a = 0; a < d; ++a) dk(a * d + a, q) -= 1.0;
  double sum = 0.0;
  for (int k = 1; k <= l; ++k) sum += weighted_lp_norm(derivative_magnitude(dk, k), static_cast<double>(k), p);
  return sum;
}

inline Error guard_error(const std::string& which, const std::string& what, double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), " at t = %.6g", t);
  return Error(ErrorCode::guard_violation, "condition (" + which + ") failed" + buf + ": " + what);
}

}  // namespace detail

struct PassOptions {
  bool probe = false;  ///< record guard quantities and stop at the first exceedance instead of throwing
  bool record_velocity = true;
  bool sample_velocities = false;
  bool growth = false;
};

/// One pass of the iteration: integrates zeta^(n) for every sample with the frozen
/// drift series (nullptr = zero drift) and assembles K_n and u on the mesh.
inline PassOutput picard_pass(const SolverConfig& cfg, const TimeMesh& mesh, const BrownianEnsemble& ens,
                              const Field& u0, const ForcingSpec& G, const std::vector<Field>* drift,
                              const std::vector<std::vector<Field>>* previous, int iteration, const PassOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const GridSpec& g = cfg.grid;
  const int d = g.d;
  const int M = ens.size();
  const int monitors = std::min(cfg.monitor_samples, M);
  const int le = cfg.l_eff();
  const double p = cfg.space.p;
  const NormSpec cauchy_spec{cfg.space, le, cfg.space.theta + le - 1.0, p};
  const NormSpec cauchy_full{cfg.space, cfg.space.l, cfg.space.theta + cfg.space.l - 1.0, p};
  const NormSpec guard_spec{cfg.space, le + 1, cfg.space.theta + le, p};
  const NormSpec growth_spec{cfg.space, le, cfg.space.theta + le, p};

  PassOutput out;
  out.record.iteration = iteration;
  out.monitor_zeta.assign(static_cast<std::size_t>(monitors), {});
  if (opt.growth) out.growth = make_growth_report(growth_spec, d);

  std::vector<FlowState> states(static_cast<std::size_t>(M), initial_flow(g));
  const bool forced = !G.is_zero();
  std::vector<MomentumFields> mom(forced ? static_cast<std::size_t>(M) : 1, initial_momentum(u0));
  std::vector<Field> A(static_cast<std::size_t>(M)), P(static_cast<std::size_t>(M));
  std::vector<double> rt(static_cast<std::size_t>(M)), kd(static_cast<std::size_t>(M)), wr(static_cast<std::size_t>(M));
  std::vector<double> cauchy(static_cast<std::size_t>(monitors)), cauchy_f(static_cast<std::size_t>(monitors));
  std::vector<double> sob(static_cast<std::size_t>(monitors)), kap(static_cast<std::size_t>(monitors));
  std::vector<std::optional<GrowthSample>> growth_row(1);
  const Field zero_drift(g, Rank::vector);

  for (int m = 0; m < M; ++m) {
    states[static_cast<std::size_t>(m)].shift = ens.shift(m, 0);
    states[static_cast<std::size_t>(m)].lambda = ens.lambda(m, 0);
  }

  for (int k = 0; k <= mesh.steps; ++k) {
    const double t = mesh.times[static_cast<std::size_t>(k)];
    GuardValues gv;
    for (const auto& s : states) {
      gv.origin = std::max(gv.origin, s.monitor.zeta_origin);
      gv.gradient = std::max(gv.gradient, s.monitor.grad_zeta_sup);
    }
    if (gv.origin > cfg.guard_origin) {
      if (opt.probe) {
        out.guards.push_back(gv);
        out.stop_reason = "origin guard exceeded";
        break;
      }
      char buf[96];
      std::snprintf(buf, sizeof(buf), "|zeta(t, 0)| = %.6g exceeds %.6g", gv.origin, cfg.guard_origin);
      throw detail::guard_error("i", buf, t);
    }

    parallel_for(static_cast<std::size_t>(M), cfg.workers, [&](std::size_t mi) {
      const int m = static_cast<int>(mi);
      FlowState& s = states[mi];
      MomentumFields& mm = mom[forced ? mi : 0];
      invert_flow(s);
      const Field grad_eta = jacobians(s);
      kd[mi] = kappa_identity_deviation(s);
      rt[mi] = round_trip_error(s);
      wr[mi] = weight_ratio(s) / s.lambda;
      A[mi] = phi_antisymmetric(s, mm.h);
      P[mi] = pullback(s, mm.g);
      if (m < monitors) {
        const auto slot = static_cast<std::size_t>(m);
        sob[slot] = sobolev_norm(s.zeta, guard_spec).total;
        kap[slot] = detail::kappa_guard_sum(s, le, p);
        if (previous && !previous->empty()) {
          const Field diff = s.zeta - (*previous)[slot][static_cast<std::size_t>(k)];
          cauchy[slot] = sobolev_norm(diff, cauchy_spec).total;
          cauchy_f[slot] = sobolev_norm(diff, cauchy_full).total;
        } else {
          cauchy[slot] = sobolev_norm(s.zeta, cauchy_spec).total;
          cauchy_f[slot] = sobolev_norm(s.zeta, cauchy_full).total;
        }
        out.monitor_zeta[slot].push_back(s.zeta);
        if (m == 0 && opt.growth) growth_row[0] = growth_sample(s, growth_spec);
      }
      if (k == mesh.steps) return;
      if (forced) accumulate_momentum(mm, s, grad_eta, G, t, mesh.dt);
      const Field& v = drift ? (*drift)[static_cast<std::size_t>(k)] : zero_drift;
      FlowState next = advance_flow(s, v, ens.shift(m, k + 1), ens.lambda(m, k + 1), mesh.dt);
      next.kappa = Field(g, Rank::vector);
      next.grad_kappa = Field(g, Rank::matrix);
      s = std::move(next);
    });
    // advance_flow errors surface above as diffeo-violation; the caller maps them.

    for (int m = 0; m < monitors; ++m) {
      gv.sobolev = std::max(gv.sobolev, sob[static_cast<std::size_t>(m)]);
      gv.kappa = std::max(gv.kappa, kap[static_cast<std::size_t>(m)]);
      out.record.cauchy = std::max(out.record.cauchy, cauchy[static_cast<std::size_t>(m)]);
      out.record.cauchy_full = std::max(out.record.cauchy_full, cauchy_f[static_cast<std::size_t>(m)]);
    }
    for (int m = 0; m < M; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      out.diagnostics.round_trip = std::max(out.diagnostics.round_trip, rt[mi]);
      out.diagnostics.kappa_deviation = std::max(out.diagnostics.kappa_deviation, kd[mi]);
      out.diagnostics.weight_ratio = std::max(out.diagnostics.weight_ratio, wr[mi]);
      out.diagnostics.boundary_exits = std::max(out.diagnostics.boundary_exits, states[mi].monitor.boundary_exits);
    }
    out.guards.push_back(gv);
    if (opt.growth && growth_row[0]) out.growth.series.push_back(*growth_row[0]);

    const Field Abar = expect_over_ensemble(A);
    out.K.push_back(kernel_from_antisymmetric(Abar));
    if (opt.record_velocity) {
      Field u = apply_solenoidal(expect_over_ensemble(P), cfg.velocity_form);
      out.diagnostics.divergence = std::max(out.diagnostics.divergence, divergence_ratio(u));
      out.u.push_back(std::move(u));
    }
    if (k == mesh.steps && opt.sample_velocities)
      for (int m = 0; m < M; ++m) out.final_sample_velocities.push_back(apply_solenoidal(P[static_cast<std::size_t>(m)], cfg.velocity_form));
    out.completed_steps = k + 1;

    const bool exceeded = gv.sobolev > cfg.guard_sobolev || gv.kappa > cfg.guard_sobolev;
    if (exceeded) {
      if (opt.probe) {
        out.stop_reason = "sobolev guard exceeded";
        break;
      }
      char buf[160];
      std::snprintf(buf, sizeof(buf), "|zeta|_H = %.6g, sum |w^k D^k grad kappa|_p = %.6g (bound %.6g)", gv.sobolev,
                    gv.kappa, cfg.guard_sobolev);
      throw detail::guard_error("ii", buf, t);
    }
  }
  for (const auto& gvk : out.guards) {
    out.record.guards.origin = std::max(out.record.guards.origin, gvk.origin);
    out.record.guards.gradient = std::max(out.record.guards.gradient, gvk.gradient);
    out.record.guards.sobolev = std::max(out.record.guards.sobolev, gvk.sobolev);
    out.record.guards.kappa = std::max(out.record.guards.kappa, gvk.kappa);
  }
  if (opt.growth) finalize_growth(out.growth);
  out.record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Horizon.

struct HorizonReport {
  std::array<double, 4> slopes{0.0, 0.0, 0.0, 0.0};  ///< C_1..C_4
  double T = 0.0;
  int binding = -1;  ///< index of the smallest bound, -1 when degenerate
  bool degenerate = false;
};

inline void to_json(nlohmann::json& j, const HorizonReport& h) {
  j = {{"slopes", h.slopes}, {"T", h.T}, {"binding", h.binding}, {"degenerate", h.degenerate}};
}

inline constexpr double kDegenerateSlope = 1e-12;

/// T = safety min{1/(2C_1), 1/(2d C_2), 1/C_3, 1/C_4}, C_i = max_t q_i(t)/t over the probe.
inline HorizonReport horizon_from_probe(std::span<const double> times, std::span<const GuardValues> q, int d,
                                        double T_max, double safety = 0.5) {
  HorizonReport r;
  for (std::size_t k = 0; k < std::min(times.size(), q.size()); ++k) {
    const double t = times[k];
    if (t <= 0.0) continue;
    r.slopes[0] = std::max(r.slopes[0], q[k].origin / t);
    r.slopes[1] = std::max(r.slopes[1], q[k].gradient / t);
    r.slopes[2] = std::max(r.slopes[2], q[k].sobolev / t);
    r.slopes[3] = std::max(r.slopes[3], q[k].kappa / t);
  }
  const std::array<double, 4> scale{2.0, 2.0 * d, 1.0, 1.0};
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    if (r.slopes[static_cast<std::size_t>(i)] <= kDegenerateSlope) continue;
    const double b = 1.0 / (scale[static_cast<std::size_t>(i)] * r.slopes[static_cast<std::size_t>(i)]);
    if (b < best) {
      best = b;
      r.binding = i;
    }
  }
  if (r.binding < 0) {
    r.degenerate = true;
    r.T = T_max;
    return r;
  }
  r.T = std::min(T_max, safety * best);
  return r;
}

inline double speed_of(const Field& u) {
  double m = 0.0;
  for (std::size_t q = 0; q < u.points(); ++q) {
    double s = 0.0;
    for (int a = 0; a < u.components(); ++a) s += u(a, q) * u(a, q);
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

/// Dry run on [0, T_max]: the zero-drift pass, then one pass driven by K_0.
inline HorizonReport choose_horizon(const SolverConfig& cfg, const Field& u0, const ForcingSpec& G) {
  const TimeMesh mesh = make_mesh(cfg.T_max, cfg.ensemble.dt, speed_of(u0), cfg.grid, cfg.cfl, cfg.min_steps);
  const BrownianEnsemble ens(cfg.grid.d, cfg.ensemble.M, mesh.steps, mesh.dt, cfg.ensemble.epsilon, cfg.ensemble.master_seed);
  PassOptions opt;
  opt.probe = true;
  opt.record_velocity = false;
  const PassOutput p0 = picard_pass(cfg, mesh, ens, u0, G, nullptr, nullptr, 0, opt);
  PassOutput p1;
  try {
    p1 = picard_pass(cfg, mesh, ens, u0, G, &p0.K, nullptr, 1, opt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::diffeo_violation && e.code() != ErrorCode::singular_jacobian &&
        e.code() != ErrorCode::no_convergence)
      throw;
    // The probe ran past a diffeomorphism guard; rerun in pieces is not needed since
    // the completed rows are lost, so fall back to the zero-drift pass growth.
    p1 = p0;
    for (auto& gv : p1.guards) gv.gradient = std::max(gv.gradient, 1.0 / (2.0 * cfg.grid.d));
  }
  return horizon_from_probe(mesh.times, p1.guards, cfg.grid.d, cfg.T_max, cfg.horizon_safety);
}

// ---------------------------------------------------------------------------

struct PicardResult {
  TimeMesh mesh;
  IterationTrace trace;
  PassOutput last;
};

/// Maps flow-level failures during a pass to guard violations naming condition (i).
template <class F>
auto with_guard_mapping(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::diffeo_violation || e.code() == ErrorCode::singular_jacobian) {
      std::string msg = e.what();
      throw Error(ErrorCode::guard_violation, "condition (i) failed: " + msg);
    }
    throw;
  }
}

inline PicardResult picard_iterate(const SolverConfig& cfg, const TimeMesh& mesh, const Field& u0, const ForcingSpec& G,
                                   const PassOptions& final_opt = {}) {
  const BrownianEnsemble ens(cfg.grid.d, cfg.ensemble.M, mesh.steps, mesh.dt, cfg.ensemble.epsilon, cfg.ensemble.master_seed);
  PicardResult r;
  r.mesh = mesh;
  PassOptions opt = final_opt;
  PassOutput prev = with_guard_mapping([&] { return picard_pass(cfg, mesh, ens, u0, G, nullptr, nullptr, 0, opt); });
  for (int n = 1; n <= cfg.max_picard; ++n) {
    PassOutput cur = with_guard_mapping([&] { return picard_pass(cfg, mesh, ens, u0, G, &prev.K, &prev.monitor_zeta, n, opt); });
    r.trace.rows.push_back(cur.record);
    prev = std::move(cur);
    if (prev.record.cauchy < cfg.tol_picard) {
      r.trace.converged = true;
      break;
    }
  }
  r.last = std::move(prev);
  if (!r.trace.converged) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "Cauchy difference %.3e still above %.3e after %d iterations",
                  r.last.record.cauchy, cfg.tol_picard, cfg.max_picard);
    throw Error(ErrorCode::no_convergence, buf);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Residual.

struct ResidualRow {
  double t = 0.0;
  double sup = 0.0;  ///< interior sup norm
  double lp = 0.0;   ///< interior weighted L_p norm, weight w^{sigma - 1}
};

/// r = (u(t+dt) - u(t-dt)) / (2 dt) - S(-u . grad u) - (eps^2 / 2) Lap_h u - G at
/// interior mesh times.
inline std::vector<ResidualRow> residual_check(std::span<const Field> u, std::span<const double> times,
                                               const ForcingSpec& G, double epsilon, const SpaceParams& space,
                                               VelocityForm form = VelocityForm::curl) {
  require(u.size() >= 3 && u.size() == times.size(), ErrorCode::invalid_argument,
          "residual_check needs at least 3 mesh times");
  const GridSpec& g = u.front().grid();
  const int d = g.d;
  std::vector<ResidualRow> rows;
  for (std::size_t k = 1; k + 1 < u.size(); ++k) {
    const double dt2 = times[k + 1] - times[k - 1];
    Field r = (1.0 / dt2) * (u[k + 1] - u[k - 1]);
    const Field J = gradient4(u[k]);
    Field adv(g, Rank::vector);
    for (std::size_t q = 0; q < g.points(); ++q)
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) acc += u[k](i, q) * J(j * d + i, q);
        adv(j, q) = -acc;
      }
    r -= apply_solenoidal(adv, form);
    Field lap(g, Rank::vector);
    for (int j = 0; j < d; ++j) {
      const Field lj = laplacian(component_field(u[k], j));
      std::copy(lj.values().begin(), lj.values().end(), lap.component(j).begin());
    }
    r -= (0.5 * epsilon * epsilon) * lap;
    if (!G.is_zero()) r -= G.field(g, times[k]);
    Field masked(g, Rank::vector);
    for (std::size_t q = 0; q < g.points(); ++q)
      if (in_interior(g, q, kInteriorFraction))
        for (int j = 0; j < d; ++j) masked(j, q) = r(j, q);
    rows.push_back({times[k], sup_norm(masked), weighted_lp_norm(masked, space.sigma() - 1.0, space.p)});
  }
  return rows;
}

// ---------------------------------------------------------------------------

struct SolveResult {
  TimeMesh mesh;
  std::optional<HorizonReport> horizon;
  IterationTrace trace;
  std::vector<Field> u;
  std::vector<Field> kernel;  ///< K of the last pass per mesh time
  std::vector<Field> final_sample_velocities;
  FlowDiagnostics diagnostics;
  GrowthReport growth;
  std::vector<ResidualRow> residual;
  double T = 0.0;
};

inline double initial_divergence(const Field& u0) {
  const Field J = gradient4(u0);
  const int d = u0.grid().d;
  const double scale = J.max_abs();
  if (scale == 0.0) return 0.0;
  double m = 0.0;
  for (std::size_t q = 0; q < u0.points(); ++q) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += J(a * d + a, q);
    m = std::max(m, std::abs(s));
  }
  return m / scale;
}

inline SolveResult solve(const SolverConfig& cfg, const Field& u0, const ForcingSpec& G) {
  cfg.validate();
  require(u0.rank() == Rank::vector && u0.grid() == cfg.grid, ErrorCode::invalid_argument,
          "u0 must be a vector field on the configured grid");
  const double div0 = initial_divergence(u0);
  if (div0 > cfg.divergence_tolerance) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "initial velocity has relative divergence %.3e above %.3e", div0,
                  cfg.divergence_tolerance);
    throw Error(ErrorCode::invalid_argument, buf);
  }
  SolveResult res;
  double T = cfg.ensemble.T;
  if (cfg.auto_horizon) {
    res.horizon = choose_horizon(cfg, u0, G);
    T = res.horizon->T;
  }
  res.T = T;
  const TimeMesh mesh = make_mesh(T, cfg.ensemble.dt, speed_of(u0), cfg.grid, cfg.cfl, cfg.min_steps);
  G.validate(cfg.grid, mesh.times);
  PassOptions opt;
  opt.growth = true;
  opt.sample_velocities = cfg.keep_sample_velocities;
  PicardResult pr = picard_iterate(cfg, mesh, u0, G, opt);
  res.mesh = pr.mesh;
  res.trace = std::move(pr.trace);
  res.u = std::move(pr.last.u);
  res.kernel = std::move(pr.last.K);
  res.final_sample_velocities = std::move(pr.last.final_sample_velocities);
  res.diagnostics = pr.last.diagnostics;
  res.growth = std::move(pr.last.growth);
  if (res.u.size() >= 3) res.residual = residual_check(res.u, mesh.times, G, cfg.epsilon(), cfg.space, cfg.velocity_form);
  return res;
}

}  // namespace lagflow
