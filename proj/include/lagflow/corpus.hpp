#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lagflow/field.hpp"

namespace lagflow {

/// One member of the smooth decaying test family: a Gaussian envelope times a
/// quadratic polynomial, both centred at c.
struct CorpusMember {
  Point centre{0.0, 0.0, 0.0};
  double width = 1.0;
  double a0 = 1.0;
  std::array<double, 3> a1{};
  double a2 = 0.0;

  double operator()(const Point& x, int d) const {
    double r2 = 0.0;
    double lin = 0.0;
    for (int k = 0; k < d; ++k) {
      const double y = x[k] - centre[k];
      r2 += y * y;
      lin += a1[k] * y / width;
    }
    return (a0 + lin + a2 * r2 / (width * width)) * std::exp(-0.5 * r2 / (width * width));
  }

  /// d_k of the member, in closed form.
  double grad(const Point& x, int d, int k) const {
    const double s2 = width * width;
    double r2 = 0.0;
    double lin = 0.0;
    for (int a = 0; a < d; ++a) {
      const double y = x[a] - centre[a];
      r2 += y * y;
      lin += a1[a] * y / width;
    }
    const double yk = x[k] - centre[k];
    const double poly = a0 + lin + a2 * r2 / s2;
    return (a1[k] / width + 2.0 * a2 * yk / s2 - poly * yk / s2) * std::exp(-0.5 * r2 / s2);
  }
};

/// Fixed-seed parameters: widths in [4h, max(4h, L/6)], centres kept 6 widths inside
/// the box where possible, so the envelope is negligible on the boundary.
inline std::vector<CorpusMember> corpus_members(const GridSpec& g, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double s_lo = 4.0 * g.h();
  const double s_hi = std::max(s_lo, g.L / 6.0);
  std::vector<CorpusMember> out;
  for (int m = 0; m < count; ++m) {
    CorpusMember c;
    c.width = s_lo + (s_hi - s_lo) * unit(rng);
    const double room = std::max(0.0, g.L - 6.5 * c.width);
    for (int k = 0; k < g.d; ++k) c.centre[k] = room * coef(rng);
    c.a0 = 0.5 + unit(rng);
    for (int k = 0; k < g.d; ++k) c.a1[k] = 0.5 * coef(rng);
    c.a2 = 0.25 * coef(rng);
    out.push_back(c);
  }
  return out;
}

inline std::vector<Field> scalar_corpus(const GridSpec& g, int count, std::uint64_t seed) {
  std::vector<Field> out;
  for (const auto& m : corpus_members(g, count, seed))
    out.push_back(Field::scalar_from(g, [&](const Point& x) { return m(x, g.d); }));
  return out;
}

/// Vector fields with independently drawn scalar components.
inline std::vector<Field> vector_corpus(const GridSpec& g, int count, std::uint64_t seed) {
  const auto members = corpus_members(g, count * g.d, seed);
  std::vector<Field> out;
  for (int m = 0; m < count; ++m) {
    out.push_back(Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> v) {
      for (int k = 0; k < g.d; ++k) v[k] = members[static_cast<std::size_t>(m * g.d + k)](x, g.d);
    }));
  }
  return out;
}

/// v = grad phi + (d_2 psi, -d_1 psi[, 0]) with phi, psi corpus members, kept
/// alongside its two exact parts.
struct HelmholtzMember {
  Field field;
  Field gradient_part;
  Field solenoidal_part;
};

/// Members are drawn against draw_grid, so the same fields can be sampled on finer grids.
inline std::vector<HelmholtzMember> helmholtz_corpus(const GridSpec& g, int count, std::uint64_t seed,
                                                     const GridSpec* draw_grid = nullptr) {
  const auto members = corpus_members(draw_grid ? *draw_grid : g, 2 * count, seed);
  std::vector<HelmholtzMember> out;
  for (int m = 0; m < count; ++m) {
    const auto& phi = members[static_cast<std::size_t>(2 * m)];
    const auto& psi = members[static_cast<std::size_t>(2 * m + 1)];
    HelmholtzMember h;
    h.gradient_part = Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> v) {
      for (int k = 0; k < g.d; ++k) v[k] = phi.grad(x, g.d, k);
    });
    h.solenoidal_part = Field::from_function(g, Rank::vector, [&](const Point& x, std::span<double> v) {
      v[0] = psi.grad(x, g.d, 1);
      v[1] = -psi.grad(x, g.d, 0);
    });
    h.field = h.gradient_part + h.solenoidal_part;
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace lagflow
