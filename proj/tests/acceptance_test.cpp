// One line per acceptance criterion; nonzero exit if any fails.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "lagflow/acceptance.hpp"

int main(int argc, char** argv) {
  const std::string suite = argc > 1 ? argv[1] : "all";
  using namespace lagflow::acceptance;
  const auto rows = run_suite(suite, [](const CriterionResult& r) { std::cout << format_row(r, true) << std::endl; });
  int failed = 0;
  for (const auto& r : rows) failed += r.passed ? 0 : 1;
  std::ofstream("acceptance.json") << to_json(suite, rows).dump(2) << "\n";
  std::cout << (failed == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failed)) << " (" << rows.size() << " criteria)\n";
  return failed == 0 ? 0 : 1;
}
