#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>

#include "lagflow/error.hpp"

namespace lagflow {

/// Spatial point; only the first d entries are meaningful.
using Point = std::array<double, 3>;
using Index3 = std::array<int, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

/// Uniform grid over the box [-L, L]^d with n nodes per axis (endpoints included).
struct GridSpec {
  int d = 2;
  double L = 1.0;
  int n = 8;

  double h() const { return 2.0 * L / static_cast<double>(n - 1); }

  std::size_t points() const {
    std::size_t count = 1;
    for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(n);
    return count;
  }

  /// Row-major: the last axis varies fastest.
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = d - 1; a > axis; --a) s *= static_cast<std::size_t>(n);
    return s;
  }

  Index3 coords(std::size_t idx) const {
    Index3 c{0, 0, 0};
    for (int a = d - 1; a >= 0; --a) {
      c[a] = static_cast<int>(idx % static_cast<std::size_t>(n));
      idx /= static_cast<std::size_t>(n);
    }
    return c;
  }

  std::size_t index(const Index3& c) const {
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(c[a]);
    return idx;
  }

  double coord(int i) const { return -L + h() * static_cast<double>(i); }

  Point point(std::size_t idx) const {
    const Index3 c = coords(idx);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) x[a] = coord(c[a]);
    return x;
  }

  double cell_volume() const { return std::pow(h(), d); }

  bool contains(const Point& x) const {
    for (int a = 0; a < d; ++a)
      if (x[a] < -L || x[a] > L) return false;
    return true;
  }

  void validate() const {
    require(d == 2 || d == 3, ErrorCode::invalid_argument, "grid dimension must be 2 or 3");
    require(n >= 8, ErrorCode::invalid_argument, "grid needs n >= 8 points per axis");
    require(L > 0.0 && std::isfinite(L), ErrorCode::invalid_argument, "grid half-width L must be positive");
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.d == b.d && a.n == b.n && a.L == b.L;
  }
};

/// Exponents of the weighted function spaces plus the noise strength.
struct SpaceParams {
  int d = 2;
  double p = 4.0;
  int l = 4;
  double theta = 1.6;
  double delta = 5.6;  ///< weight offset; theta + l for the solution space
  double epsilon = 0.0;

  double sigma() const { return theta - static_cast<double>(d) / p; }

  /// Throws config_invalid naming the first violated constraint.
  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::config_invalid, what); };
    const double dd = static_cast<double>(d);
    if (!(d >= 2)) fail("constraint d >= 2 violated (p > d >= 2)");
    if (!(p > dd)) {
      std::ostringstream os;
      os << "constraint p > d >= 2 violated (p = " << p << ", d = " << d << ")";
      fail(os.str());
    }
    if (!(theta >= 1.0 + dd / p)) {
      std::ostringstream os;
      os << "constraint theta >= 1 + d/p violated (theta = " << theta << ", 1 + d/p = " << 1.0 + dd / p << ")";
      fail(os.str());
    }
    if (!(theta < dd)) {
      std::ostringstream os;
      os << "constraint theta < d violated (theta = " << theta << ")";
      fail(os.str());
    }
    if (!(l >= 4)) fail("constraint l >= 4 violated (l = " + std::to_string(l) + ")");
    if (!(epsilon >= 0.0)) fail("constraint epsilon >= 0 violated");
  }
};

}  // namespace lagflow
