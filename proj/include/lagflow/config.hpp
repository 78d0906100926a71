#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "lagflow/error.hpp"
#include "lagflow/lagrangian.hpp"
#include "lagflow/reference.hpp"
#include "lagflow/solver.hpp"

namespace lagflow {

/// Hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, ErrorCode::io_error, "cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  require(ok, ErrorCode::io_error, "SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

enum class ScenarioKind { zero, lamb_oseen, euler_vortex, euler_shielded, vortex_pair, solenoidal_gaussian };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::zero: return "zero";
    case ScenarioKind::lamb_oseen: return "lamb_oseen";
    case ScenarioKind::euler_vortex: return "euler_vortex";
    case ScenarioKind::euler_shielded: return "euler_shielded";
    case ScenarioKind::vortex_pair: return "vortex_pair";
    case ScenarioKind::solenoidal_gaussian: return "solenoidal_gaussian";
  }
  return "?";
}

/// Initial data by name. Lamb-Oseen binds nu = epsilon^2 / 2.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::zero;
  double amplitude = 1.0;    ///< multiplies u0
  double circulation = 1.0;  ///< Lamb-Oseen, vortex pair, Euler vortex
  double t0 = 2.25;          ///< core-age offset
  double radius = 0.3;       ///< Euler vortex core
  double separation = 1.0;   ///< vortex pair
  double width = 0.5;        ///< solenoidal Gaussian
  Point centre{0.0, 0.0, 0.0};

  bool planar() const { return kind != ScenarioKind::zero && kind != ScenarioKind::solenoidal_gaussian; }

  /// Closed-form reference in time, when one exists.
  std::optional<reference::OracleSolution> oracle(double epsilon) const {
    const double nu = 0.5 * epsilon * epsilon;
    auto scaled = [this](reference::OracleSolution s) {
      if (amplitude == 1.0) return s;
      auto v = s.velocity;
      auto j = s.jacobian;
      const double a = amplitude;
      s.velocity = [v, a](double t, const Point& x, std::span<double> u) {
        v(t, x, u);
        for (double& c : u) c *= a;
      };
      s.jacobian = [j, a](double t, const Point& x, std::span<double> J) {
        j(t, x, J);
        for (double& c : J) c *= a;
      };
      return s;
    };
    switch (kind) {
      case ScenarioKind::lamb_oseen:
        if (!(nu > 0.0)) return std::nullopt;
        return scaled(reference::lamb_oseen(circulation, t0, nu, centre));
      case ScenarioKind::euler_vortex:
        if (epsilon != 0.0) return std::nullopt;
        return scaled(reference::stationary_euler_vortex(reference::VortexProfile::gaussian_vorticity, circulation, radius));
      case ScenarioKind::euler_shielded:
        if (epsilon != 0.0) return std::nullopt;
        return scaled(reference::stationary_euler_vortex(reference::VortexProfile::shielded, circulation, radius));
      default: return std::nullopt;
    }
  }

  Field initial(const GridSpec& g, double epsilon) const {
    if (planar() && g.d != 2) throw Error(ErrorCode::config_invalid, std::string("scenario.kind: ") + to_string(kind) + " needs d = 2");
    switch (kind) {
      case ScenarioKind::zero: return Field(g, Rank::vector);
      case ScenarioKind::solenoidal_gaussian: {
        const reference::GaussianBump psi{amplitude, width, centre};
        return reference::stream_field(psi, g);
      }
      case ScenarioKind::vortex_pair: {
        const double nu = std::max(0.5 * epsilon * epsilon, 1e-3);
        return amplitude * reference::vortex_pair(circulation, t0, nu, separation).field(g, 0.0);
      }
      case ScenarioKind::lamb_oseen:
        if (!(epsilon > 0.0)) throw Error(ErrorCode::config_invalid, "scenario.kind: lamb_oseen needs ensemble.epsilon > 0 (nu = epsilon^2 / 2)");
        [[fallthrough]];
      default: {
        const auto o = oracle(epsilon);
        if (!o) throw Error(ErrorCode::config_invalid, std::string("scenario.kind: ") + to_string(kind) + " needs ensemble.epsilon = 0");
        return o->field(g, 0.0);
      }
    }
  }
};

struct OutputSpec {
  bool dump_series = true;
  std::vector<Point> probe_points;
};

struct RunConfig {
  SolverConfig solver;
  ScenarioSpec scenario;
  ForcingSpec forcing;
  OutputSpec output;
  std::string text;  ///< the bytes the config was parsed from
  std::string hash;  ///< sha256 of text
  std::filesystem::path source;
};

namespace detail {

using boost::property_tree::ptree;

/// Typed access that records which keys were consumed so unknown ones can be reported.
class ConfigReader {
 public:
  explicit ConfigReader(const ptree& t) : tree_(t) {}

  template <class T>
  T get(const std::string& section, const std::string& key, T fallback) {
    used_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return fallback;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return fallback;
    return convert<T>(section + "." + key, *v);
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  void reject_unknown() const {
    static const std::set<std::string> sections{"space", "grid", "ensemble", "solver", "scenario", "forcing", "output"};
    for (const auto& [sec, child] : tree_) {
      if (!sections.count(sec)) throw Error(ErrorCode::config_invalid, "[" + sec + "]: unknown section");
      for (const auto& [key, value] : child) {
        (void)value;
        if (!used_.count(sec + "." + key)) throw Error(ErrorCode::config_invalid, sec + "." + key + ": unknown key");
      }
    }
  }

 private:
  template <class T>
  static T convert(const std::string& field, const std::string& s) {
    std::string v = s;
    if (const auto hash = v.find_first_of(";#"); hash != std::string::npos) v.erase(hash);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.pop_back();
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.erase(v.begin());
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
      if (v == "false" || v == "0" || v == "no" || v == "off") return false;
      throw Error(ErrorCode::config_invalid, field + ": expected a boolean, got '" + v + "'");
    } else {
      T out{};
      const char* first = v.data();
      const char* last = first + v.size();
      const auto [ptr, ec] = std::from_chars(first, last, out);
      if (v.empty() || ec != std::errc{} || ptr != last)
        throw Error(ErrorCode::config_invalid, field + ": cannot parse '" + v + "'");
      return out;
    }
  }

  const ptree& tree_;
  std::set<std::string> used_;
};

inline std::vector<Point> parse_points(const std::string& field, const std::string& s) {
  std::vector<Point> pts;
  std::stringstream all(s);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream one(item);
    Point p{0.0, 0.0, 0.0};
    std::string c;
    int k = 0;
    while (std::getline(one, c, ',')) {
      if (k >= 3) throw Error(ErrorCode::config_invalid, field + ": more than 3 coordinates");
      try {
        p[k++] = std::stod(c);
      } catch (const std::exception&) {
        throw Error(ErrorCode::config_invalid, field + ": cannot parse coordinate '" + c + "'");
      }
    }
    pts.push_back(p);
  }
  return pts;
}

inline ScenarioKind scenario_kind_from(const std::string& s) {
  for (ScenarioKind k : {ScenarioKind::zero, ScenarioKind::lamb_oseen, ScenarioKind::euler_vortex,
                         ScenarioKind::euler_shielded, ScenarioKind::vortex_pair, ScenarioKind::solenoidal_gaussian})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::config_invalid, "scenario.kind: unknown scenario '" + s + "'");
}

}  // namespace detail

/// Parses the sectioned key = value text. Throws config_invalid naming field and reason.
inline RunConfig parse_config(const std::string& text) {
  detail::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::config_invalid, std::string("config syntax: ") + e.message() + " (line " +
                                               std::to_string(e.line()) + ")");
  }
  detail::ConfigReader r(tree);
  RunConfig c;
  c.text = text;
  c.hash = sha256_hex(text);
  SolverConfig& s = c.solver;

  s.space.d = r.get<int>("space", "d", 2);
  s.space.p = r.get<double>("space", "p", 4.0);
  s.space.l = r.get<int>("space", "l", 4);
  s.space.theta = r.get<double>("space", "theta", 1.6);
  s.space.delta = r.get<double>("space", "delta", s.space.theta + s.space.l);

  s.grid.d = s.space.d;
  s.grid.L = r.get<double>("grid", "L", 2.0);
  s.grid.n = r.get<int>("grid", "n", 64);

  s.ensemble.M = r.get<int>("ensemble", "M", 1);
  s.ensemble.T = r.get<double>("ensemble", "T", 0.01);
  s.ensemble.dt = r.get<double>("ensemble", "dt", 0.01);
  s.ensemble.epsilon = r.get<double>("ensemble", "epsilon", 0.0);
  s.ensemble.master_seed = r.get<std::uint64_t>("ensemble", "master_seed", 1);
  s.space.epsilon = s.ensemble.epsilon;

  s.auto_horizon = r.get<bool>("solver", "auto_horizon", false);
  s.T_max = r.get<double>("solver", "T_max", 1.0);
  s.max_picard = r.get<int>("solver", "max_picard", 12);
  s.tol_picard = r.get<double>("solver", "tol_picard", 1e-9);
  s.monitor_samples = r.get<int>("solver", "monitor_samples", 2);
  s.min_steps = r.get<int>("solver", "min_steps", 4);
  s.cfl = r.get<double>("solver", "cfl", 0.25);
  s.divergence_tolerance = r.get<double>("solver", "divergence_tolerance", 1e-2);
  s.keep_sample_velocities = r.get<bool>("solver", "keep_sample_velocities", false);
  s.horizon_safety = r.get<double>("solver", "horizon_safety", 0.5);
  const std::string form = r.get<std::string>("solver", "velocity_form", "curl");
  if (form == "curl") s.velocity_form = VelocityForm::curl;
  else if (form == "projected") s.velocity_form = VelocityForm::projected;
  else throw Error(ErrorCode::config_invalid, "solver.velocity_form: expected curl or projected, got '" + form + "'");

  ScenarioSpec& sc = c.scenario;
  sc.kind = detail::scenario_kind_from(r.get<std::string>("scenario", "kind", "zero"));
  sc.amplitude = r.get<double>("scenario", "amplitude", 1.0);
  sc.circulation = r.get<double>("scenario", "circulation", 1.0);
  sc.t0 = r.get<double>("scenario", "t0", 2.25);
  sc.radius = r.get<double>("scenario", "radius", 0.3);
  sc.separation = r.get<double>("scenario", "separation", 1.0);
  sc.width = r.get<double>("scenario", "width", 0.5);
  sc.centre = {r.get<double>("scenario", "centre_x", 0.0), r.get<double>("scenario", "centre_y", 0.0),
               r.get<double>("scenario", "centre_z", 0.0)};
  if (!(sc.t0 > 0.0)) throw Error(ErrorCode::config_invalid, "scenario.t0: must be positive");
  if (!(sc.radius > 0.0)) throw Error(ErrorCode::config_invalid, "scenario.radius: must be positive");
  if (!(sc.width > 0.0)) throw Error(ErrorCode::config_invalid, "scenario.width: must be positive");

  ForcingSpec& G = c.forcing;
  G.kind = forcing_kind_from(r.get<std::string>("forcing", "kind", "zero"));
  G.amplitude = r.get<double>("forcing", "amplitude", 0.0);
  G.width = r.get<double>("forcing", "width", 0.5);
  G.centre = {r.get<double>("forcing", "centre_x", 0.0), r.get<double>("forcing", "centre_y", 0.0),
              r.get<double>("forcing", "centre_z", 0.0)};
  G.omega = r.get<double>("forcing", "omega", 0.0);
  G.directory = r.get<std::string>("forcing", "directory", "");
  G.divergence_tolerance = r.get<double>("forcing", "divergence_tolerance", 1e-3);
  if (G.kind == ForcingKind::directory && G.directory.empty())
    throw Error(ErrorCode::config_invalid, "forcing.directory: required for kind = directory");

  c.output.dump_series = r.get<bool>("output", "dump_series", true);
  if (const auto pts = r.raw("output", "probe_points")) c.output.probe_points = detail::parse_points("output.probe_points", *pts);

  r.reject_unknown();
  try {
    s.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_invalid) throw;
    throw Error(ErrorCode::config_invalid, e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_invalid, "cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  RunConfig c = parse_config(os.str());
  c.source = path;
  if (c.forcing.kind == ForcingKind::directory && c.forcing.directory.is_relative())
    c.forcing.directory = path.parent_path() / c.forcing.directory;
  return c;
}

}  // namespace lagflow
