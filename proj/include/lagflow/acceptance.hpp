#pragma once

// Property suites behind `lagflow verify`.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagflow/corpus.hpp"
#include "lagflow/potential.hpp"
#include "lagflow/reference.hpp"
#include "lagflow/run.hpp"
#include "lagflow/sobolev.hpp"
#include "lagflow/solver.hpp"

namespace lagflow::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
};

inline void to_json(nlohmann::json& j, const CriterionResult& r) {
  j = {{"id", r.id},           {"name", r.name},           {"passed", r.passed}, {"measured", r.measured},
       {"threshold", r.threshold}, {"detail", r.detail}, {"seconds", r.seconds}};
}

namespace detail {

inline double rel_l2_outside_core(const Field& a, const Field& b) {
  const GridSpec& g = a.grid();
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    if (!in_interior(g, q, kInteriorFraction)) continue;
    const Point x = g.point(q);
    double r2 = 0.0;
    for (int k = 0; k < g.d; ++k) r2 += x[k] * x[k];
    if (std::sqrt(r2) <= 2.0 * g.h()) continue;
    for (int c = 0; c < a.components(); ++c) {
      num += std::pow(a(c, q) - b(c, q), 2);
      den += b(c, q) * b(c, q);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline bool bitwise_equal(const Field& a, const Field& b) {
  return a.compatible(b) && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

constexpr double kLambOseenNu = 0.01;  // eps^2 = 2 nu = 0.02

inline SolverConfig lamb_oseen_config(int n, int M) {
  SolverConfig c;
  c.grid = GridSpec{2, 2.0, n};
  c.ensemble = EnsembleSpec{M, 0.1, 0.01, std::sqrt(2.0 * kLambOseenNu), 1};
  c.auto_horizon = true;
  c.T_max = 1.0;
  c.tol_picard = 1e-10;
  c.max_picard = 12;
  return c;
}

inline reference::OracleSolution lamb_oseen() { return reference::lamb_oseen(1.0, 2.25, kLambOseenNu); }

/// The n = 64, M = 32 Lamb-Oseen solve shared by criteria 5, 8 and 9.
struct BaseRun {
  SolverConfig cfg;
  SolveResult result;
};

inline const BaseRun& base_run() {
  static const BaseRun run = [] {
    BaseRun r;
    r.cfg = lamb_oseen_config(64, 32);
    r.result = solve(r.cfg, lamb_oseen().field(r.cfg.grid, 0.0), ForcingSpec{});
    return r;
  }();
  return run;
}

// --- operators ---------------------------------------------------------------

inline CriterionResult projection_correctness() {
  CriterionResult r{1, "projection correctness"};
  const GridSpec g{2, 4.0, 64};
  const reference::GaussianBump psi{1.0, 0.6, {0.2, -0.1, 0.0}};
  const Field grad = reference::gradient_of(psi, g);
  const Field rot = reference::stream_field(psi, g);
  double grad_leak = 0.0, rot_dev = 0.0;
  for (auto m : {ProjectionMethod::quadrature, ProjectionMethod::spectral}) {
    grad_leak = std::max(grad_leak, sup_norm(solenoidal(grad, m)) / sup_norm(grad));
    rot_dev = std::max(rot_dev, sup_norm(solenoidal(rot, m) - rot) / sup_norm(rot));
  }
  double agree = 0.0;
  for (const auto& h : helmholtz_corpus(g, 4, 77))
    agree = std::max(agree, relative_l2_interior(solenoidal(h.field, ProjectionMethod::quadrature),
                                                 solenoidal(h.field, ProjectionMethod::spectral)));
  r.measured = std::max({grad_leak / 0.01, rot_dev / 0.01, agree / 0.02});
  r.threshold = 1.0;
  r.passed = grad_leak <= 0.01 && rot_dev <= 0.01 && agree <= 0.02;
  r.detail = "gradient leak " + fmt(grad_leak) + ", stream deviation " + fmt(rot_dev) + ", quadrature/spectral " + fmt(agree);
  return r;
}

inline CriterionResult helmholtz_orthogonality() {
  CriterionResult r{2, "Helmholtz orthogonality"};
  const GridSpec g{2, 4.0, 64};
  const auto c = helmholtz_corpus(g, 40, 5);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); i += 2) {
    const Field& v = c[i].field;
    const Field& f = c[i + 1].field;
    const Field Gv = project(v).gradient_part;
    const Field Sf = project(f).solenoidal_part;
    double dot = 0.0, nv = 0.0, nf = 0.0;
    for (std::size_t q = 0; q < g.points(); ++q)
      for (int k = 0; k < 2; ++k) {
        dot += Gv(k, q) * Sf(k, q);
        nv += v(k, q) * v(k, q);
        nf += f(k, q) * f(k, q);
      }
    worst = std::max(worst, std::abs(dot) / (std::sqrt(nv) * std::sqrt(nf)));
  }
  r.measured = worst;
  r.threshold = 1e-3;
  r.passed = worst <= r.threshold;
  r.detail = "20 pairs, worst normalised inner product";
  return r;
}

inline CriterionResult newton_inversion() {
  CriterionResult r{3, "Newton-potential inversion"};
  const auto members = corpus_members(GridSpec{2, 4.0, 48}, 6, 31);
  std::vector<double> scaled, absolute;
  for (int n : {48, 95}) {
    const GridSpec g{2, 4.0, n};
    double w = 0.0, a = 0.0;
    for (const auto& m : members) {
      const Field f = Field::scalar_from(g, [&](const Point& x) { return m(x, 2); });
      const double e = sup_norm_interior(laplacian(newton_potential(f)) - f);
      w = std::max(w, e / (g.h() * g.h() * f.max_abs()));
      a = std::max(a, e);
    }
    scaled.push_back(w);
    absolute.push_back(a);
  }
  const double rate = std::log2(absolute[0] / absolute[1]);
  r.measured = std::max(scaled[0], scaled[1]);
  r.threshold = 5.0;
  r.passed = r.measured <= r.threshold && rate >= 1.5;
  r.detail = "max |lap N(f) - f| / (h^2 |f|) = " + fmt(r.measured) + ", observed order " + fmt(rate);
  return r;
}

inline CriterionResult boundedness_stability() {
  CriterionResult r{4, "operator boundedness stability"};
  const SpaceParams s;
  const auto members = corpus_members(GridSpec{2, 4.0, 48}, 6, 12);
  std::vector<double> maxima;
  for (int n : {48, 64}) {
    const GridSpec g{2, 4.0, n};
    std::vector<Field> corpus;
    for (const auto& m : members) corpus.push_back(Field::scalar_from(g, [&](const Point& x) { return m(x, 2); }));
    maxima.push_back(boundedness_probe(corpus, s, 2).max);
  }
  r.measured = std::max(maxima[1] / maxima[0], maxima[0] / maxima[1]);
  r.threshold = 2.0;
  r.passed = r.measured < r.threshold;
  r.detail = "max ratio " + fmt(maxima[0]) + " (n=48), " + fmt(maxima[1]) + " (n=64)";
  return r;
}

inline CriterionResult kernel_identity() {
  CriterionResult r{6, "kernel identity at t = 0"};
  SolverConfig c;
  c.grid = GridSpec{2, 2.0, 64};
  c.ensemble = EnsembleSpec{1, 0.002, 0.001, 0.0, 1};
  const reference::GaussianBump psi{0.3, 0.35, {0.1, -0.05, 0.0}};
  const Field u0 = reference::stream_field(psi, c.grid);
  const SolveResult res = solve(c, u0, ForcingSpec{});
  r.measured = relative_l2_interior(res.kernel.front(), project(u0).solenoidal_part);
  r.threshold = 0.03;
  r.passed = r.measured <= r.threshold;
  r.detail = "relative L2 interior, K(0) against S(u0)";
  return r;
}

inline CriterionResult ap_sanity() {
  CriterionResult r{13, "A_p sanity"};
  const SpaceParams s;
  const auto one = ap_check(0.0, s.p, 40);
  const auto a = ap_check(s.sigma(), s.p, 200);
  const auto b = ap_check(s.sigma(), s.p, 400);
  const double flat = std::max(std::abs(one.max_product - 1.0), std::abs(one.min_product - 1.0));
  const double drift = std::abs(b.max_product / a.max_product - 1.0);
  r.measured = drift;
  r.threshold = 0.1;
  r.passed = flat <= 1e-6 && std::isfinite(a.max_product) && drift <= r.threshold;
  r.detail = "|product - 1| at alpha=0: " + fmt(flat) + ", sup at alpha=sigma " + fmt(a.max_product) + " -> " + fmt(b.max_product);
  return r;
}

// --- flow --------------------------------------------------------------------

inline CriterionResult flow_round_trip() {
  CriterionResult r{5, "flow round-trip"};
  const BaseRun& b = base_run();
  const auto& dg = b.result.diagnostics;
  const double rt_tol = 1e-8 * b.cfg.grid.L;
  r.measured = dg.round_trip;
  r.threshold = rt_tol;
  r.passed = dg.round_trip <= rt_tol && dg.kappa_deviation < 1.0 / b.cfg.grid.d;
  r.detail = "max |kappa(eta(x)) - x| " + fmt(dg.round_trip) + ", max |grad kappa - I| " + fmt(dg.kappa_deviation);
  return r;
}

// --- solver ------------------------------------------------------------------

inline CriterionResult simplified_kernel() {
  CriterionResult r{7, "simplified vs direct K"};
  SolverConfig c;
  c.grid = GridSpec{2, 2.0, 48};
  c.ensemble = EnsembleSpec{8, 0.1, 0.01, 0.1, 7};
  c.auto_horizon = true;
  c.velocity_form = VelocityForm::projected;
  c.tol_picard = 1e-9;
  const reference::GaussianBump psi{0.3, 0.35, {0.1, -0.05, 0.0}};
  const Field u0 = reference::stream_field(psi, c.grid);
  ForcingSpec G;
  G.kind = ForcingKind::solenoidal_gaussian;
  G.amplitude = 0.8;
  G.width = 0.4;
  G.centre = {-0.2, 0.15, 0.0};
  const SolveResult res = solve(c, u0, G);
  const std::size_t k = res.kernel.size() / 2;
  r.measured = relative_l2_interior(res.kernel[k], res.u[k]);
  r.threshold = 0.03;
  r.passed = r.measured <= r.threshold;
  r.detail = "t = " + fmt(res.mesh.times[k]) + " of T = " + fmt(res.T);
  return r;
}

inline CriterionResult picard_signature() {
  CriterionResult r{8, "Picard convergence signature"};
  const auto& rows = base_run().result.trace.rows;
  std::size_t run = 1;
  for (std::size_t i = 1; i < rows.size() && rows[i].cauchy < rows[i - 1].cauchy; ++i) ++run;
  const bool monotone = run == rows.size();
  r.measured = rows.empty() || rows.front().cauchy == 0.0 ? 0.0 : rows.back().cauchy / rows.front().cauchy;
  r.threshold = 0.1;
  r.passed = monotone && rows.size() >= 4 && r.measured < r.threshold;
  std::string seq;
  for (const auto& row : rows) seq += (seq.empty() ? "" : " ") + fmt(row.cauchy);
  r.detail = std::to_string(rows.size()) + " iterations: " + seq;
  return r;
}

/// The single-seed error is Monte-Carlo dominated, so the refinement comparison uses
/// the RMS error over kReplicates master seeds at each level.
inline constexpr int kReplicates = 4;

inline CriterionResult viscous_regression() {
  CriterionResult r{9, "Lamb-Oseen regression"};
  const BaseRun& b = base_run();
  const auto lo = lamb_oseen();
  const double T = b.result.T;
  const double e0 = rel_l2_outside_core(b.result.u.back(), lo.field(b.cfg.grid, T));

  SolverConfig coarse = b.cfg;
  coarse.auto_horizon = false;
  coarse.ensemble.T = T;
  SolverConfig fine = lamb_oseen_config(2 * b.cfg.grid.n - 1, 4 * b.cfg.ensemble.M);
  fine.auto_horizon = false;
  fine.ensemble.T = T;
  double ms_coarse = e0 * e0, ms_fine = 0.0, worst = e0;
  std::string seq0 = fmt(e0), seq1;
  for (int k = 0; k < kReplicates; ++k) {
    const std::uint64_t seed = b.cfg.ensemble.master_seed + static_cast<std::uint64_t>(k);
    if (k > 0) {
      coarse.ensemble.master_seed = seed;
      const SolveResult rc = solve(coarse, lo.field(coarse.grid, 0.0), ForcingSpec{});
      const double e = rel_l2_outside_core(rc.u.back(), lo.field(coarse.grid, T));
      ms_coarse += e * e;
      worst = std::max(worst, e);
      seq0 += " " + fmt(e);
    }
    fine.ensemble.master_seed = seed;
    const SolveResult rf = solve(fine, lo.field(fine.grid, 0.0), ForcingSpec{});
    const double e = rel_l2_outside_core(rf.u.back(), lo.field(fine.grid, T));
    ms_fine += e * e;
    seq1 += (k == 0 ? "" : " ") + fmt(e);
  }
  const double rms0 = std::sqrt(ms_coarse / kReplicates), rms1 = std::sqrt(ms_fine / kReplicates);
  r.measured = worst;
  r.threshold = 0.05;
  r.passed = worst <= r.threshold && rms1 < rms0;
  r.detail = "rms error " + fmt(rms0) + " (n=64, M=32) -> " + fmt(rms1) + " (n=127, M=128) over " +
             std::to_string(kReplicates) + " seeds at T = " + fmt(T) + "; per seed " + seq0 + " | " + seq1;
  return r;
}

inline CriterionResult euler_regression() {
  CriterionResult r{10, "stationary Euler vortex"};
  SolverConfig c;
  c.grid = GridSpec{2, 2.0, 48};
  c.ensemble = EnsembleSpec{1, 0.1, 0.001, 0.0, 1};
  c.auto_horizon = true;
  c.tol_picard = 1e-10;
  const auto ev = reference::stationary_euler_vortex(reference::VortexProfile::gaussian_vorticity, 1.0, 0.3);
  const Field u0 = ev.field(c.grid, 0.0);
  const SolveResult res = solve(c, u0, ForcingSpec{});
  double worst = 0.0;
  for (const auto& u : res.u) worst = std::max(worst, rel_l2_outside_core(u, u0));
  r.measured = worst;
  r.threshold = 0.02;
  r.passed = worst <= r.threshold;
  r.detail = "max drift over " + std::to_string(res.u.size()) + " times up to T = " + fmt(res.T);
  return r;
}

inline CriterionResult guard_enforcement() {
  CriterionResult r{12, "guard enforcement"};
  SolverConfig c = lamb_oseen_config(40, 4);
  const auto lo = lamb_oseen();
  const HorizonReport h = choose_horizon(c, lo.field(c.grid, 0.0), ForcingSpec{});
  c.auto_horizon = false;
  c.ensemble.T = h.T;
  r.threshold = 1.0;
  try {
    solve(c, 50.0 * lo.field(c.grid, 0.0), ForcingSpec{});
    r.detail = "no error raised at 50x amplitude";
  } catch (const Error& e) {
    const std::string what = e.what();
    const bool named = what.find("(i)") != std::string::npos || what.find("(ii)") != std::string::npos;
    r.passed = e.code() == ErrorCode::guard_violation && named;
    r.measured = r.passed ? 1.0 : 0.0;
    r.detail = what;
  }
  return r;
}

inline CriterionResult determinism() {
  CriterionResult r{14, "determinism across worker counts"};
  SolverConfig c = lamb_oseen_config(48, 16);
  c.auto_horizon = false;
  c.ensemble.T = 0.008;
  c.keep_sample_velocities = true;
  const Field u0 = lamb_oseen().field(c.grid, 0.0);
  c.workers = 1;
  const SolveResult a = solve(c, u0, ForcingSpec{});
  c.workers = 8;
  const SolveResult b = solve(c, u0, ForcingSpec{});
  std::size_t differing = 0;
  if (a.u.size() != b.u.size()) differing = std::max(a.u.size(), b.u.size());
  for (std::size_t k = 0; k < std::min(a.u.size(), b.u.size()); ++k)
    if (!bitwise_equal(a.u[k], b.u[k])) ++differing;
  for (std::size_t m = 0; m < a.final_sample_velocities.size(); ++m)
    if (!bitwise_equal(a.final_sample_velocities[m], b.final_sample_velocities[m])) ++differing;
  r.measured = static_cast<double>(differing);
  r.threshold = 0.0;
  r.passed = differing == 0;
  r.detail = std::to_string(a.u.size()) + " series fields and " + std::to_string(a.final_sample_velocities.size()) +
             " sample fields compared, workers 1 vs 8";
  return r;
}

// --- statistics --------------------------------------------------------------

inline CriterionResult monte_carlo_scaling() {
  CriterionResult r{11, "Monte-Carlo scaling"};
  std::vector<Point> probes;
  for (int i = 0; i < 10; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 10.0;
    const double rad = 0.25 + 0.05 * (i % 3);
    probes.push_back({rad * std::cos(a), rad * std::sin(a), 0.0});
  }
  std::vector<double> se;
  const std::vector<int> sizes{16, 64, 256};
  for (int M : sizes) {
    SolverConfig c = lamb_oseen_config(32, M);
    c.auto_horizon = false;
    c.ensemble.T = 0.008;
    c.ensemble.master_seed = 11;
    c.keep_sample_velocities = true;
    const SolveResult res = solve(c, lamb_oseen().field(c.grid, 0.0), ForcingSpec{});
    double acc = 0.0;
    for (const Point& x : probes) {
      std::array<double, 2> mean{0.0, 0.0}, sq{0.0, 0.0};
      for (const Field& f : res.final_sample_velocities) {
        const auto s = sample(f, x);
        for (int k = 0; k < 2; ++k) {
          mean[k] += s.values[k];
          sq[k] += s.values[k] * s.values[k];
        }
      }
      double var = 0.0;
      for (int k = 0; k < 2; ++k) var += (sq[k] - mean[k] * mean[k] / M) / (M - 1);
      acc += std::sqrt(std::max(0.0, var) / M);
    }
    se.push_back(acc / probes.size());
  }
  double worst = 0.0;
  std::string seq;
  for (std::size_t i = 0; i + 1 < se.size(); ++i) {
    const double ratio = se[i] / se[i + 1];
    worst = std::max(worst, std::abs(ratio / 2.0 - 1.0));
    seq += (seq.empty() ? "" : ", ") + fmt(ratio);
  }
  r.measured = worst;
  r.threshold = 0.25;
  r.passed = worst <= r.threshold;
  r.detail = "SE ratios per quadrupling " + seq + " (ideal 2)";
  return r;
}

}  // namespace detail

struct Criterion {
  int id;
  std::string name;
  std::function<CriterionResult()> run;
};

inline const std::map<std::string, std::vector<Criterion>>& suites() {
  using namespace detail;
  static const std::map<std::string, std::vector<Criterion>> s{
      {"operators",
       {{1, "projection correctness", projection_correctness},
        {2, "Helmholtz orthogonality", helmholtz_orthogonality},
        {3, "Newton-potential inversion", newton_inversion},
        {4, "operator boundedness stability", boundedness_stability},
        {6, "kernel identity at t = 0", kernel_identity},
        {13, "A_p sanity", ap_sanity}}},
      {"flow", {{5, "flow round-trip", flow_round_trip}}},
      {"solver",
       {{7, "simplified vs direct K", simplified_kernel},
        {8, "Picard convergence signature", picard_signature},
        {9, "Lamb-Oseen regression", viscous_regression},
        {10, "stationary Euler vortex", euler_regression},
        {12, "guard enforcement", guard_enforcement},
        {14, "determinism across worker counts", determinism}}},
      {"statistics", {{11, "Monte-Carlo scaling", monte_carlo_scaling}}},
  };
  return s;
}

inline bool is_suite(const std::string& name) { return name == "all" || suites().contains(name); }

/// Runs a suite (or all of them, ordered by criterion id). A criterion that
/// throws is recorded as failed with the error text.
inline std::vector<CriterionResult> run_suite(const std::string& name, const std::function<void(const CriterionResult&)>& on_result = {}) {
  require(is_suite(name), ErrorCode::unknown_suite, "unknown suite '" + name + "' (operators, flow, solver, statistics, all)");
  std::vector<Criterion> list;
  if (name == "all") {
    for (const auto& [_, v] : suites()) list.insert(list.end(), v.begin(), v.end());
  } else {
    list = suites().at(name);
  }
  std::vector<CriterionResult> out;
  for (const auto& c : list) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r{c.id, c.name};
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

/// One table line. Timings are left out unless asked for, so repeated runs print
/// the same table.
inline std::string format_row(const CriterionResult& r, bool with_time = false) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << "  [" << std::setw(2) << r.id << "] " << std::left << std::setw(34) << r.name
     << std::right << " measured " << std::setw(10) << std::setprecision(4) << r.measured << "  limit " << std::setw(8)
     << r.threshold << "  ";
  if (with_time) os << std::fixed << std::setprecision(1) << r.seconds << "s  ";
  os << r.detail;
  return os.str();
}

inline nlohmann::json to_json(const std::string& suite, std::span<const CriterionResult> rows) {
  nlohmann::json j;
  j["suite"] = suite;
  j["criteria"] = nlohmann::json::array();
  bool all = true;
  for (const auto& r : rows) {
    j["criteria"].push_back(r);
    all = all && r.passed;
  }
  j["passed"] = all;
  return j;
}

}  // namespace lagflow::acceptance
