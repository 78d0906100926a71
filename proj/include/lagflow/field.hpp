#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lagflow/error.hpp"
#include "lagflow/grid.hpp"

namespace lagflow {

enum class Rank { scalar, vector, matrix };

inline int component_count(Rank rank, int d) {
  switch (rank) {
    case Rank::scalar: return 1;
    case Rank::vector: return d;
    case Rank::matrix: return d * d;
  }
  return 1;
}

/// Polynomial weight (1 + |x|^2)^{1/2}.
inline double weight(const Point& x, int d = 3) {
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
  return std::sqrt(1.0 + r2);
}

/// Grid samples of a scalar, vector or matrix field. Storage is component-outermost,
/// each component row-major over the grid. Matrix entry (i, j) is component i * d + j.
class Field {
 public:
  Field() = default;

  Field(const GridSpec& grid, Rank rank)
      : grid_(grid), rank_(rank), components_(component_count(rank, grid.d)),
        values_(grid.points() * static_cast<std::size_t>(components_), 0.0) {}

  Field(const GridSpec& grid, Rank rank, std::vector<double> values)
      : grid_(grid), rank_(rank), components_(component_count(rank, grid.d)), values_(std::move(values)) {
    require(values_.size() == grid.points() * static_cast<std::size_t>(components_), ErrorCode::invalid_argument,
            "field value count does not match grid and rank");
  }

  /// fn(x, out) writes all components at grid point x.
  template <class Fn>
  static Field from_function(const GridSpec& grid, Rank rank, Fn&& fn) {
    Field f(grid, rank);
    std::array<double, 9> out{};
    const std::size_t np = grid.points();
    for (std::size_t p = 0; p < np; ++p) {
      out.fill(0.0);
      fn(grid.point(p), std::span<double>(out.data(), static_cast<std::size_t>(f.components_)));
      for (int c = 0; c < f.components_; ++c) f(c, p) = out[static_cast<std::size_t>(c)];
    }
    return f;
  }

  template <class Fn>
  static Field scalar_from(const GridSpec& grid, Fn&& fn) {
    return from_function(grid, Rank::scalar, [&](const Point& x, std::span<double> out) { out[0] = fn(x); });
  }

  const GridSpec& grid() const { return grid_; }
  Rank rank() const { return rank_; }
  int components() const { return components_; }
  std::size_t points() const { return grid_.points(); }
  bool empty() const { return values_.empty(); }

  std::span<const double> component(int c) const {
    return {values_.data() + static_cast<std::size_t>(c) * points(), points()};
  }
  std::span<double> component(int c) { return {values_.data() + static_cast<std::size_t>(c) * points(), points()}; }

  double operator()(int c, std::size_t p) const { return values_[static_cast<std::size_t>(c) * points() + p]; }
  double& operator()(int c, std::size_t p) { return values_[static_cast<std::size_t>(c) * points() + p]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  /// Same grid and component layout.
  bool compatible(const Field& o) const { return grid_ == o.grid_ && components_ == o.components_; }

 private:
  void check_same(const Field& o) const {
    require(compatible(o), ErrorCode::invalid_argument, "field grid/rank mismatch");
  }

  GridSpec grid_{};
  Rank rank_ = Rank::scalar;
  int components_ = 0;
  std::vector<double> values_;
};

inline Field component_field(const Field& f, int c) {
  Field out(f.grid(), Rank::scalar);
  std::copy(f.component(c).begin(), f.component(c).end(), out.component(0).begin());
  return out;
}

/// Assemble a vector field from d scalar fields.
inline Field stack_vector(std::span<const Field> parts) {
  require(!parts.empty(), ErrorCode::invalid_argument, "no components");
  const GridSpec& g = parts.front().grid();
  require(static_cast<int>(parts.size()) == g.d, ErrorCode::invalid_argument, "need d components");
  Field out(g, Rank::vector);
  for (int c = 0; c < g.d; ++c) {
    const auto src = parts[static_cast<std::size_t>(c)].component(0);
    std::copy(src.begin(), src.end(), out.component(c).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences: 2nd-order centred interior, 2nd-order one-sided at the ends.

namespace detail {

/// Applies a 1D stencil of derivative order 1 or 2 along one axis.
inline void apply_axis(std::span<const double> in, std::span<double> out, const GridSpec& g, int axis, int order) {
  const int n = g.n;
  const std::size_t s = g.stride(axis);
  const double h = g.h();
  const std::size_t np = g.points();
  const std::size_t block = s * static_cast<std::size_t>(n);
  for (std::size_t outer = 0; outer < np; outer += block) {
    for (std::size_t inner = 0; inner < s; ++inner) {
      const std::size_t base = outer + inner;
      auto f = [&](int i) { return in[base + static_cast<std::size_t>(i) * s]; };
      auto o = [&](int i) -> double& { return out[base + static_cast<std::size_t>(i) * s]; };
      if (order == 4) {  // fourth-order first derivative, second order in the two edge layers
        const double c = 1.0 / (12.0 * h);
        o(0) = 0.5 / h * (-3.0 * f(0) + 4.0 * f(1) - f(2));
        o(1) = 0.5 / h * (f(2) - f(0));
        for (int i = 2; i < n - 2; ++i) o(i) = c * (-f(i + 2) + 8.0 * f(i + 1) - 8.0 * f(i - 1) + f(i - 2));
        o(n - 2) = 0.5 / h * (f(n - 1) - f(n - 3));
        o(n - 1) = 0.5 / h * (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3));
      } else if (order == 1) {
        const double c = 0.5 / h;
        o(0) = c * (-3.0 * f(0) + 4.0 * f(1) - f(2));
        for (int i = 1; i < n - 1; ++i) o(i) = c * (f(i + 1) - f(i - 1));
        o(n - 1) = c * (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3));
      } else {
        const double c = 1.0 / (h * h);
        o(0) = c * (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3));
        for (int i = 1; i < n - 1; ++i) o(i) = c * (f(i - 1) - 2.0 * f(i) + f(i + 1));
        o(n - 1) = c * (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4));
      }
    }
  }
}

}  // namespace detail

/// Derivative orders above this are rejected.
inline constexpr int kDefaultStencilBudget = 6;

using MultiIndex = std::array<int, 3>;

inline int order_of(const MultiIndex& gamma, int d) {
  int k = 0;
  for (int a = 0; a < d; ++a) k += gamma[a];
  return k;
}

/// D^gamma f, component-wise. Orders above 2 along an axis compose the order-2 and
/// order-1 stencils.
inline Field derivative(const Field& f, const MultiIndex& gamma, int budget = kDefaultStencilBudget) {
  const GridSpec& g = f.grid();
  const int k = order_of(gamma, g.d);
  for (int a = 0; a < g.d; ++a) require(gamma[a] >= 0, ErrorCode::invalid_argument, "negative multi-index");
  if (k > budget)
    throw Error(ErrorCode::order_too_high,
                "derivative order " + std::to_string(k) + " exceeds stencil budget " + std::to_string(budget));
  Field result = f;
  std::vector<double> scratch(g.points());
  for (int a = 0; a < g.d; ++a) {
    int m = gamma[a];
    while (m > 0) {
      const int step = (m >= 2) ? 2 : 1;
      for (int c = 0; c < f.components(); ++c) {
        auto comp = result.component(c);
        std::copy(comp.begin(), comp.end(), scratch.begin());
        detail::apply_axis(scratch, comp, g, a, step);
      }
      m -= step;
    }
  }
  return result;
}

inline Field partial(const Field& f, int axis) {
  MultiIndex gamma{0, 0, 0};
  gamma[axis] = 1;
  return derivative(f, gamma);
}

/// First derivative along one axis with the fourth-order central stencil.
inline Field partial4(const Field& f, int axis) {
  require(axis >= 0 && axis < f.grid().d, ErrorCode::invalid_argument, "axis out of range");
  Field out(f.grid(), f.rank());
  for (int c = 0; c < f.components(); ++c) detail::apply_axis(f.component(c), out.component(c), f.grid(), axis, 4);
  return out;
}

/// Jacobian: scalar -> vector (gradient), vector -> matrix with entry (i, j) = d_j f^i.
inline Field gradient(const Field& f) {
  const GridSpec& g = f.grid();
  require(f.rank() != Rank::matrix, ErrorCode::invalid_argument, "gradient of a matrix field");
  const Rank out_rank = f.rank() == Rank::scalar ? Rank::vector : Rank::matrix;
  Field out(g, out_rank);
  for (int j = 0; j < g.d; ++j) {
    const Field dj = partial(f, j);
    for (int i = 0; i < f.components(); ++i) {
      const int c = (out_rank == Rank::vector) ? j : i * g.d + j;
      std::copy(dj.component(i).begin(), dj.component(i).end(), out.component(c).begin());
    }
  }
  return out;
}

/// As gradient, with the fourth-order stencil.
inline Field gradient4(const Field& f) {
  const GridSpec& g = f.grid();
  require(f.rank() != Rank::matrix, ErrorCode::invalid_argument, "gradient of a matrix field");
  const Rank out_rank = f.rank() == Rank::scalar ? Rank::vector : Rank::matrix;
  Field out(g, out_rank);
  for (int j = 0; j < g.d; ++j) {
    const Field dj = partial4(f, j);
    for (int i = 0; i < f.components(); ++i) {
      const int c = (out_rank == Rank::vector) ? j : i * g.d + j;
      std::copy(dj.component(i).begin(), dj.component(i).end(), out.component(c).begin());
    }
  }
  return out;
}

inline Field divergence(const Field& v) {
  require(v.rank() == Rank::vector, ErrorCode::invalid_argument, "divergence needs a vector field");
  const GridSpec& g = v.grid();
  Field out(g, Rank::scalar);
  std::vector<double> tmp(g.points());
  for (int i = 0; i < g.d; ++i) {
    detail::apply_axis(v.component(i), tmp, g, i, 1);
    auto o = out.component(0);
    for (std::size_t p = 0; p < g.points(); ++p) o[p] += tmp[p];
  }
  return out;
}

/// Discrete Laplacian (3-point second differences summed over axes), per component.
inline Field laplacian(const Field& f) {
  const GridSpec& g = f.grid();
  Field out(g, f.rank());
  std::vector<double> tmp(g.points());
  for (int c = 0; c < f.components(); ++c) {
    auto o = out.component(c);
    for (int a = 0; a < g.d; ++a) {
      detail::apply_axis(f.component(c), tmp, g, a, 2);
      for (std::size_t p = 0; p < g.points(); ++p) o[p] += tmp[p];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multilinear interpolation with boundary clamping.

struct SampleResult {
  std::array<double, 9> values{};
  bool clamped = false;
};

struct SampleGradResult {
  std::array<double, 3> values{};
  Mat3 jacobian{};  ///< jacobian[i][j] = d/dx_j of component i of the interpolant
  bool clamped = false;
};

namespace detail {

struct CellLocation {
  std::array<int, 3> cell{};
  std::array<double, 3> frac{};
  std::array<bool, 3> outside{};
  bool clamped = false;
};

inline CellLocation locate(const GridSpec& g, const Point& x) {
  CellLocation loc;
  const double h = g.h();
  for (int a = 0; a < g.d; ++a) {
    double u = (x[a] + g.L) / h;
    if (const double r = std::round(u); std::abs(u - r) < 1e-9) u = r;  // exact at nodes
    if (!(u >= 0.0)) {  // also catches NaN
      u = 0.0;
      loc.clamped = true;
      loc.outside[a] = true;
    } else if (u > static_cast<double>(g.n - 1)) {
      u = static_cast<double>(g.n - 1);
      loc.clamped = true;
      loc.outside[a] = true;
    }
    int i = static_cast<int>(std::floor(u));
    if (i > g.n - 2) i = g.n - 2;
    loc.cell[a] = i;
    loc.frac[a] = u - static_cast<double>(i);
  }
  return loc;
}

}  // namespace detail

/// Multilinear interpolation of all components at x; exact at nodes. Points outside
/// the box take the value at the nearest boundary point and set clamped.
inline SampleResult sample(const Field& f, const Point& x) {
  const GridSpec& g = f.grid();
  const auto loc = detail::locate(g, x);
  SampleResult r;
  r.clamped = loc.clamped;
  const int corners = 1 << g.d;
  for (int corner = 0; corner < corners; ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    for (int a = 0; a < g.d; ++a) {
      const int bit = (corner >> (g.d - 1 - a)) & 1;
      w *= bit ? loc.frac[a] : 1.0 - loc.frac[a];
      idx = idx * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(loc.cell[a] + bit);
    }
    if (w == 0.0) continue;
    for (int c = 0; c < f.components(); ++c) r.values[static_cast<std::size_t>(c)] += w * f(c, idx);
  }
  return r;
}

inline constexpr double kCubicReach = 2.0;

/// Tensor-product four-point Lagrange interpolation; the stencil is shifted inward
/// next to the boundary. Exact at nodes and for cubics. Points just outside the box
/// are extrapolated (up to kCubicReach cells), further ones clamped; both set clamped.

inline SampleResult sample_cubic(const Field& f, const Point& x) {
  const GridSpec& g = f.grid();
  const auto loc = detail::locate(g, x);
  SampleResult r;
  r.clamped = loc.clamped;
  if (g.n < 4) return sample(f, x);
  std::array<std::array<double, 4>, 3> w{};
  std::array<int, 3> first{};
  for (int a = 0; a < g.d; ++a) {
    const int s = std::clamp(loc.cell[a] - 1, 0, g.n - 4);
    first[a] = s;
    double pos = loc.cell[a] + loc.frac[a];
    if (loc.outside[a] && std::isfinite(x[a]))  // extrapolate up to kCubicReach cells past the box
      pos = std::clamp((x[a] + g.L) / g.h(), -kCubicReach, g.n - 1 + kCubicReach);
    const double u = pos - s;  // position within the stencil, nodes at 0..3
    for (int k = 0; k < 4; ++k) {
      double v = 1.0;
      for (int m = 0; m < 4; ++m)
        if (m != k) v *= (u - m) / static_cast<double>(k - m);
      w[a][k] = v;
    }
  }
  const int count = g.d == 2 ? 16 : 64;
  for (int c = 0; c < count; ++c) {
    double wt = 1.0;
    std::size_t idx = 0;
    int rem = c;
    std::array<int, 3> o{};
    for (int a = g.d - 1; a >= 0; --a) {
      o[a] = rem % 4;
      rem /= 4;
    }
    for (int a = 0; a < g.d; ++a) {
      wt *= w[a][o[a]];
      idx = idx * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(first[a] + o[a]);
    }
    if (wt == 0.0) continue;
    for (int k = 0; k < f.components(); ++k) r.values[static_cast<std::size_t>(k)] += wt * f(k, idx);
  }
  return r;
}

/// Values and exact derivative of the interpolant of a vector field (zero derivative
/// along clamped axes).
inline SampleGradResult sample_with_gradient(const Field& f, const Point& x) {
  const GridSpec& g = f.grid();
  const auto loc = detail::locate(g, x);
  SampleGradResult r;
  r.clamped = loc.clamped;
  const double inv_h = 1.0 / g.h();
  const int corners = 1 << g.d;
  const int nc = std::min(f.components(), 3);
  for (int corner = 0; corner < corners; ++corner) {
    std::array<double, 3> lin{};
    std::array<double, 3> dlin{};
    std::size_t idx = 0;
    for (int a = 0; a < g.d; ++a) {
      const int bit = (corner >> (g.d - 1 - a)) & 1;
      lin[a] = bit ? loc.frac[a] : 1.0 - loc.frac[a];
      dlin[a] = loc.outside[a] ? 0.0 : (bit ? inv_h : -inv_h);
      idx = idx * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(loc.cell[a] + bit);
    }
    double w = 1.0;
    for (int a = 0; a < g.d; ++a) w *= lin[a];
    for (int c = 0; c < nc; ++c) {
      const double v = f(c, idx);
      r.values[static_cast<std::size_t>(c)] += w * v;
      for (int j = 0; j < g.d; ++j) {
        double dw = dlin[j];
        for (int a = 0; a < g.d; ++a)
          if (a != j) dw *= lin[a];
        r.jacobian[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] += dw * v;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Small helpers used across modules.

/// Points with |x|_inf <= fraction * L.
inline bool in_interior(const GridSpec& g, std::size_t idx, double fraction) {
  const Point x = g.point(idx);
  for (int a = 0; a < g.d; ++a)
    if (std::abs(x[a]) > fraction * g.L + 1e-12) return false;
  return true;
}

inline constexpr double kInteriorFraction = 0.75;

/// Max over points of the Euclidean norm across components.
inline double sup_norm(const Field& f) {
  double m = 0.0;
  for (std::size_t p = 0; p < f.points(); ++p) {
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) s += f(c, p) * f(c, p);
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

inline double sup_norm_interior(const Field& f, double fraction = kInteriorFraction) {
  double m = 0.0;
  for (std::size_t p = 0; p < f.points(); ++p) {
    if (!in_interior(f.grid(), p, fraction)) continue;
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) s += f(c, p) * f(c, p);
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

/// Relative L2 difference over interior points, optionally excluding a ball.
inline double relative_l2_interior(const Field& a, const Field& b, double fraction = kInteriorFraction,
                                   double exclude_radius = 0.0, Point center = {0.0, 0.0, 0.0}) {
  require(a.compatible(b), ErrorCode::invalid_argument, "field mismatch");
  const GridSpec& g = a.grid();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < g.points(); ++p) {
    if (!in_interior(g, p, fraction)) continue;
    if (exclude_radius > 0.0) {
      const Point x = g.point(p);
      double r2 = 0.0;
      for (int k = 0; k < g.d; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
      if (r2 < exclude_radius * exclude_radius) continue;
    }
    for (int c = 0; c < a.components(); ++c) {
      const double e = a(c, p) - b(c, p);
      num += e * e;
      den += b(c, p) * b(c, p);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace lagflow
