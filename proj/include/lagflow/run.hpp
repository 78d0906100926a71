#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>
#include <json.hpp>

#include "lagflow/config.hpp"
#include "lagflow/field_io.hpp"
#include "lagflow/solver.hpp"

namespace lagflow {

inline constexpr const char* kVersionString = "0.1.0";

namespace fs = std::filesystem;

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// <first 12 hex digits of the config hash>_s<seed>
inline std::string run_dir_name(const RunConfig& c) {
  return c.hash.substr(0, 12) + "_s" + std::to_string(c.solver.ensemble.master_seed);
}

/// relative L2 error against the oracle on |x|_inf <= 0.75 L, excluding a two-cell core
inline double oracle_error(const Field& u, const reference::OracleSolution& o, double t, Point centre = {0.0, 0.0, 0.0}) {
  const GridSpec& g = u.grid();
  const Field ex = o.field(g, t);
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    if (!in_interior(g, q, kInteriorFraction)) continue;
    const Point x = g.point(q);
    double r2 = 0.0;
    for (int a = 0; a < g.d; ++a) r2 += (x[a] - centre[a]) * (x[a] - centre[a]);
    if (std::sqrt(r2) <= 2.0 * g.h()) continue;
    for (int c = 0; c < g.d; ++c) {
      num += std::pow(u(c, q) - ex(c, q), 2);
      den += ex(c, q) * ex(c, q);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Per-point sample standard deviation of the final-time velocities.
inline Field sample_std(std::span<const Field> samples) {
  require(samples.size() >= 2, ErrorCode::invalid_argument, "sample_std needs two samples");
  const Field mean = expect_over_ensemble(samples);
  Field out(mean.grid(), mean.rank());
  const double M = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    double s = 0.0;
    for (const auto& f : samples) s += std::pow(f.values()[i] - mean.values()[i], 2);
    out.values()[i] = std::sqrt(s / (M - 1.0));
  }
  return out;
}

struct RunOutcome {
  nlohmann::json record;
  fs::path dir;
  bool ok = false;
  std::optional<Error> error;
  std::optional<SolveResult> result;
};

/// Executes solve for a parsed config and writes every artifact under root/<run_dir_name>.
inline RunOutcome execute_run(RunConfig cfg, const fs::path& root, int workers = 0) {
  RunOutcome out;
  out.dir = root / run_dir_name(cfg);
  fs::create_directories(out.dir);
  auto& rec = out.record;
  rec["config_hash"] = cfg.hash;
  rec["config"] = "config.ini";
  rec["master_seed"] = cfg.solver.ensemble.master_seed;
  rec["started"] = utc_now();
  rec["versions"] = {{"lagflow", kVersionString}, {"compiler", __VERSION__}, {"fftw", std::string(fftw_version)}};
  std::vector<std::string> artifacts{"config.ini"};
  {
    std::ofstream os(out.dir / "config.ini", std::ios::binary);
    os << cfg.text;
  }
  cfg.solver.workers = workers;
  auto write_record = [&] {
    rec["finished"] = utc_now();
    rec["artifacts"] = artifacts;
    std::ofstream os(out.dir / "record.json");
    os << rec.dump(2) << "\n";
  };
  try {
    cfg.forcing.load(cfg.solver.grid);
    const Field u0 = cfg.scenario.initial(cfg.solver.grid, cfg.solver.ensemble.epsilon);
    SolveResult r = solve(cfg.solver, u0, cfg.forcing);
    const auto& mesh = r.mesh;

    {
      std::ofstream ts(out.dir / "times.txt");
      ts << std::setprecision(17);
      for (double t : mesh.times) ts << t << "\n";
    }
    artifacts.push_back("times.txt");
    if (cfg.output.dump_series)
      for (std::size_t k = 0; k < r.u.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "u_%04zu.lgfd", k);
        io::write_binary(r.u[k], out.dir / name);
        artifacts.emplace_back(name);
      }
    if (r.final_sample_velocities.size() >= 2) {
      io::write_binary(sample_std(r.final_sample_velocities), out.dir / "u_final_std.lgfd");
      artifacts.emplace_back("u_final_std.lgfd");
      rec["samples_for_std"] = r.final_sample_velocities.size();
    }
    {
      nlohmann::json trace = r.trace;
      std::ofstream os(out.dir / "trace.json");
      os << trace.dump(2) << "\n";
      artifacts.emplace_back("trace.json");
    }
    {
      nlohmann::json monitor = r.growth;
      std::ofstream os(out.dir / "monitor.json");
      os << monitor.dump(2) << "\n";
      artifacts.emplace_back("monitor.json");
    }
    {
      std::ofstream os(out.dir / "residual.csv");
      os << "t,sup,lp\n" << std::setprecision(10);
      for (const auto& row : r.residual) os << row.t << "," << row.sup << "," << row.lp << "\n";
      artifacts.emplace_back("residual.csv");
    }
    nlohmann::json summary;
    summary["T"] = r.T;
    summary["steps"] = mesh.steps;
    summary["dt"] = mesh.dt;
    summary["iterations"] = r.trace.rows.size();
    summary["converged"] = r.trace.converged;
    summary["final_cauchy"] = r.trace.rows.empty() ? 0.0 : r.trace.rows.back().cauchy;
    GuardValues worst;
    for (const auto& row : r.trace.rows) {
      worst.origin = std::max(worst.origin, row.guards.origin);
      worst.gradient = std::max(worst.gradient, row.guards.gradient);
      worst.sobolev = std::max(worst.sobolev, row.guards.sobolev);
      worst.kappa = std::max(worst.kappa, row.guards.kappa);
    }
    summary["guards"] = worst;
    summary["diagnostics"] = r.diagnostics;
    summary["growth_drift"] = r.growth.any_drift;
    if (r.horizon) summary["horizon"] = *r.horizon;
    rec["summary"] = summary;

    if (const auto o = cfg.scenario.oracle(cfg.solver.ensemble.epsilon)) {
      std::ofstream os(out.dir / "error.csv");
      os << "t,rel_l2\n" << std::setprecision(10);
      auto table = nlohmann::json::array();
      for (std::size_t k = 0; k < r.u.size(); ++k) {
        const double e = oracle_error(r.u[k], *o, mesh.times[k], cfg.scenario.centre);
        os << mesh.times[k] << "," << e << "\n";
        table.push_back({{"t", mesh.times[k]}, {"rel_l2", e}});
      }
      rec["error_vs_exact"] = table;
      artifacts.emplace_back("error.csv");
    }
    if (!cfg.output.probe_points.empty()) {
      std::ofstream os(out.dir / "probes.csv");
      os << std::setprecision(12) << "x,y,z,t";
      for (int c = 0; c < cfg.solver.grid.d; ++c) os << ",u" << c;
      os << ",note\n";
      for (std::size_t k = 0; k < r.u.size(); ++k)
        for (const auto& p : cfg.output.probe_points) {
          const auto s = sample(r.u[k], p);
          os << p[0] << "," << p[1] << "," << p[2] << "," << mesh.times[k];
          for (int c = 0; c < cfg.solver.grid.d; ++c) os << "," << s.values[static_cast<std::size_t>(c)];
          os << "," << (s.clamped ? "clamped" : "") << "\n";
        }
      artifacts.emplace_back("probes.csv");
    }
    const double L = cfg.solver.grid.L;
    const bool pass = r.trace.converged && r.diagnostics.round_trip <= 1e-8 * L &&
                      r.diagnostics.kappa_deviation < 1.0 / cfg.solver.grid.d;
    rec["status"] = "ok";
    rec["verdict"] = pass ? "pass" : "fail";
    out.ok = true;
    out.result = std::move(r);
  } catch (const Error& e) {
    rec["status"] = "failed";
    rec["verdict"] = "fail";
    rec["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    out.error = e;
  }
  write_record();
  return out;
}

// ---------------------------------------------------------------------------
// Probing a finished run.

struct ProbeRow {
  Point x{};
  double t = 0.0;
  std::array<double, 3> u{};
  std::optional<std::array<double, 3>> std_dev;
  std::string note;
};

inline std::vector<double> read_times(const fs::path& dir) {
  std::ifstream in(dir / "times.txt");
  if (!in) throw Error(ErrorCode::missing_artifact, "run directory has no times.txt: " + dir.string());
  std::vector<double> t;
  for (double v; in >> v;) t.push_back(v);
  return t;
}

/// Velocity at (point, time): multilinear in space, linear in time between dumps.
inline std::vector<ProbeRow> probe_run(const fs::path& dir, std::span<const Point> points, std::span<const double> times) {
  const std::vector<double> mesh = read_times(dir);
  require(!mesh.empty(), ErrorCode::missing_artifact, "times.txt is empty");
  auto dump = [&](std::size_t k) {
    char name[32];
    std::snprintf(name, sizeof(name), "u_%04zu.lgfd", k);
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw Error(ErrorCode::missing_artifact, "missing velocity dump " + p.string());
    return io::read_binary(p);
  };
  std::optional<Field> std_final;
  if (fs::exists(dir / "u_final_std.lgfd")) std_final = io::read_binary(dir / "u_final_std.lgfd");
  std::vector<ProbeRow> rows;
  for (double t : times) {
    std::string tnote;
    double tc = t;
    if (t < mesh.front() || t > mesh.back()) {
      tc = std::clamp(t, mesh.front(), mesh.back());
      tnote = "time clamped";
    }
    std::size_t k = 0;
    while (k + 1 < mesh.size() && mesh[k + 1] <= tc) ++k;
    const double a = k + 1 < mesh.size() ? (tc - mesh[k]) / (mesh[k + 1] - mesh[k]) : 0.0;
    const Field f0 = dump(k);
    std::optional<Field> f1;
    if (a > 0.0) f1 = dump(k + 1);
    const int d = f0.grid().d;
    for (const auto& x : points) {
      ProbeRow row;
      row.x = x;
      row.t = t;
      const auto s0 = sample(f0, x);
      for (int c = 0; c < d; ++c) row.u[static_cast<std::size_t>(c)] = s0.values[static_cast<std::size_t>(c)];
      if (f1) {
        const auto s1 = sample(*f1, x);
        for (int c = 0; c < d; ++c)
          row.u[static_cast<std::size_t>(c)] = (1.0 - a) * s0.values[static_cast<std::size_t>(c)] + a * s1.values[static_cast<std::size_t>(c)];
      }
      if (std_final && a == 0.0 && k + 1 == mesh.size()) {
        const auto ss = sample(*std_final, x);
        std::array<double, 3> sd{};
        for (int c = 0; c < d; ++c) sd[static_cast<std::size_t>(c)] = ss.values[static_cast<std::size_t>(c)];
        row.std_dev = sd;
      }
      row.note = tnote;
      if (s0.clamped) row.note += std::string(row.note.empty() ? "" : "; ") + "outside box; clamped to boundary";
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_probe_csv(std::ostream& os, std::span<const ProbeRow> rows, int d) {
  os << std::setprecision(15) << "x,y,z,t";
  for (int c = 0; c < d; ++c) os << ",u" << c;
  for (int c = 0; c < d; ++c) os << ",std" << c;
  os << ",note\n";
  for (const auto& r : rows) {
    os << r.x[0] << "," << r.x[1] << "," << r.x[2] << "," << r.t;
    for (int c = 0; c < d; ++c) os << "," << r.u[static_cast<std::size_t>(c)];
    for (int c = 0; c < d; ++c) {
      os << ",";
      if (r.std_dev) os << (*r.std_dev)[static_cast<std::size_t>(c)];
    }
    os << "," << r.note << "\n";
  }
}

inline std::vector<Point> read_points_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_artifact, "cannot read points file " + path.string());
  std::vector<Point> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream is(line);
    Point p{0.0, 0.0, 0.0};
    int k = 0;
    for (double v; k < 3 && is >> v;) p[k++] = v;
    if (k > 0) pts.push_back(p);
  }
  return pts;
}

}  // namespace lagflow
