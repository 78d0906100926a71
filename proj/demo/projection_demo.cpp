// Helmholtz split of grad phi + rot psi with both projection methods.
#include <cstdio>

#include "lagflow/lagflow.hpp"

using namespace lagflow;

int main() {
  std::printf("n,method,sup_error_solenoidal,div_after\n");
  const GridSpec coarse{2, 4.0, 32};  // members drawn once, sampled on each grid
  for (int n : {32, 64, 96}) {
    const GridSpec g{2, 4.0, n};
    for (const auto& m : helmholtz_corpus(g, 1, 3, &coarse)) {
      for (auto method : {ProjectionMethod::quadrature, ProjectionMethod::spectral}) {
        const Field s = solenoidal(m.field, method);
        std::printf("%d,%s,%.3e,%.3e\n", n, method == ProjectionMethod::quadrature ? "quadrature" : "spectral",
                    sup_norm(s - m.solenoidal_part) / sup_norm(m.field), sup_norm_interior(divergence(s)));
      }
    }
  }
}
