#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lagflow/error.hpp"

namespace lagflow {

/// SplitMix64 finaliser; maps (master seed, stream) to well-separated generator seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

/// Ensemble parameters as they appear in a run config.
struct EnsembleSpec {
  int M = 1;
  double T = 0.1;
  double dt = 0.01;
  double epsilon = 0.0;
  std::uint64_t master_seed = 1;
};

/// M independent d-dimensional Brownian paths on a uniform mesh t_k = k dt, k = 0..steps.
/// Sample m is generated from its own seed, so paths do not depend on M or on the
/// order in which they are requested.
class BrownianEnsemble {
 public:
  BrownianEnsemble() = default;

  BrownianEnsemble(int d, int M, int steps, double dt, double epsilon, std::uint64_t master_seed)
      : d_(d), M_(M), steps_(steps), dt_(dt), epsilon_(epsilon), seed_(master_seed) {
    require(d == 2 || d == 3, ErrorCode::invalid_argument, "Brownian dimension must be 2 or 3");
    require(M >= 1, ErrorCode::empty_ensemble, "ensemble needs M >= 1");
    require(steps >= 1 && dt > 0.0, ErrorCode::invalid_argument, "time mesh needs steps >= 1 and dt > 0");
    positions_.assign(static_cast<std::size_t>(M) * static_cast<std::size_t>(steps + 1) * 3, 0.0);
    lambda_.assign(static_cast<std::size_t>(M) * static_cast<std::size_t>(steps + 1), 1.0);
    const double sd = std::sqrt(dt);
    for (int m = 0; m < M; ++m) {
      std::mt19937_64 rng(sample_seed(master_seed, static_cast<std::uint64_t>(m)));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::array<double, 3> b{0.0, 0.0, 0.0};
      double sup = 0.0;
      for (int k = 1; k <= steps; ++k) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          b[a] += sd * normal(rng);
          r2 += b[a] * b[a];
        }
        sup = std::max(sup, std::sqrt(r2));
        for (int a = 0; a < d; ++a) positions_[slot(m, k) * 3 + static_cast<std::size_t>(a)] = b[a];
        lambda_[slot(m, k)] = 1.0 + epsilon * sup;
      }
    }
  }

  int d() const { return d_; }
  int size() const { return M_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double epsilon() const { return epsilon_; }
  std::uint64_t master_seed() const { return seed_; }
  double time(int k) const { return k * dt_; }

  /// B_{t_k} of sample m.
  std::array<double, 3> position(int m, int k) const {
    std::array<double, 3> b{0.0, 0.0, 0.0};
    for (int a = 0; a < d_; ++a) b[a] = positions_[slot(m, k) * 3 + static_cast<std::size_t>(a)];
    return b;
  }

  /// B_{t_{k+1}} - B_{t_k}.
  std::array<double, 3> increment(int m, int k) const {
    const auto b1 = position(m, k + 1);
    const auto b0 = position(m, k);
    return {b1[0] - b0[0], b1[1] - b0[1], b1[2] - b0[2]};
  }

  /// epsilon B_{t_k}, the uniform shift of the flow.
  std::array<double, 3> shift(int m, int k) const {
    auto b = position(m, k);
    for (double& v : b) v *= epsilon_;
    return b;
  }

  /// 1 + epsilon sup_{s <= t_k} |B_s| over mesh points.
  double lambda(int m, int k) const { return lambda_[slot(m, k)]; }

 private:
  std::size_t slot(int m, int k) const {
    return static_cast<std::size_t>(m) * static_cast<std::size_t>(steps_ + 1) + static_cast<std::size_t>(k);
  }

  int d_ = 2;
  int M_ = 0;
  int steps_ = 0;
  double dt_ = 0.0;
  double epsilon_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> positions_;
  std::vector<double> lambda_;
};

}  // namespace lagflow
