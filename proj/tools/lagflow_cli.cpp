#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lagflow/lagflow.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigInvalid = 2;
constexpr int kRunFailed = 3;
constexpr int kVerifyFailed = 4;

int exit_code_for(const lagflow::Error& e) {
  switch (e.code()) {
    case lagflow::ErrorCode::config_invalid:
    case lagflow::ErrorCode::unknown_suite: return kConfigInvalid;
    default: return kRunFailed;
  }
}

std::vector<double> parse_times(const std::string& list) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(list);
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw lagflow::Error(lagflow::ErrorCode::invalid_argument, "--times: not a number: '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lagflow: stochastic Lagrangian Navier-Stokes solver"};
  app.set_version_flag("--version", lagflow::kVersionString);
  app.require_subcommand(1);

  int workers = 0;
  app.add_option("--workers", workers, "worker threads (default: LAGFLOW_WORKERS, else 1)")->check(CLI::NonNegativeNumber);
  double kernel_scale = 1.0;
  app.add_option("--kernel-scale", kernel_scale)->group("");  // mutation testing only

  auto* run = app.add_subcommand("run", "solve a scenario config and write a run directory");
  std::string config_path, out_root = "runs";
  run->add_option("config", config_path, "scenario config (.ini)")->required();
  run->add_option("--out", out_root, "parent directory for run directories");

  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  std::string suite, json_path;
  verify->add_option("suite", suite, "operators, flow, solver, statistics or all")->required();
  verify->add_option("--json", json_path, "also write the table as JSON");
  bool timings = false;
  verify->add_flag("--timings", timings, "append per-criterion wall time to the table");

  auto* probe = app.add_subcommand("probe", "interpolate a run's velocity at points and times");
  std::string run_dir, points_path, times_list, probe_out;
  probe->add_option("run-dir", run_dir)->required();
  probe->add_option("--points", points_path, "file with one point per line (x,y[,z])")->required();
  probe->add_option("--times", times_list, "comma-separated times")->required();
  probe->add_option("--out", probe_out, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigInvalid;
  }

  if (kernel_scale != 1.0) lagflow::set_kernel_scale_for_testing(kernel_scale);
  if (workers > 0) setenv("LAGFLOW_WORKERS", std::to_string(workers).c_str(), 1);

  try {
    if (*run) {
      const lagflow::RunConfig cfg = lagflow::load_config(config_path);
      const auto outcome = lagflow::execute_run(cfg, out_root, workers);
      std::cout << outcome.dir.string() << "\n";
      if (!outcome.ok) {
        std::cerr << "run failed: " << outcome.error->what() << "\n";
        return kRunFailed;
      }
      std::cout << "verdict: " << outcome.record.value("verdict", "fail") << "\n";
      return kOk;
    }
    if (*verify) {
      namespace acc = lagflow::acceptance;
      const auto rows = acc::run_suite(suite, [&](const acc::CriterionResult& r) { std::cout << acc::format_row(r, timings) << std::endl; });
      if (!json_path.empty()) std::ofstream(json_path) << acc::to_json(suite, rows).dump(2) << "\n";
      bool all = true;
      for (const auto& r : rows) all = all && r.passed;
      std::cout << (all ? "all criteria passed" : "verification failed") << "\n";
      return all ? kOk : kVerifyFailed;
    }
    if (*probe) {
      const auto points = lagflow::read_points_file(points_path);
      const auto times = parse_times(times_list);
      const auto rows = lagflow::probe_run(run_dir, points, times);
      const int d = rows.empty() ? 2 : lagflow::io::read_binary(std::filesystem::path(run_dir) / "u_0000.lgfd").grid().d;
      if (probe_out.empty()) {
        lagflow::write_probe_csv(std::cout, rows, d);
      } else {
        std::ofstream os(probe_out);
        lagflow::write_probe_csv(os, rows, d);
      }
      return kOk;
    }
  } catch (const lagflow::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailed;
  }
  return kOk;
}
