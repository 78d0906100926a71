#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "lagflow/error.hpp"
#include "lagflow/fft.hpp"
#include "lagflow/field.hpp"
#include "lagflow/field_io.hpp"
#include "lagflow/sobolev.hpp"

namespace lagflow {

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) { return d == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0; }

/// Fundamental solution of the Laplacian, Gamma(r).
inline double newton_kernel(double r, int d) {
  if (d == 2) return std::log(r) / (2.0 * std::numbers::pi);
  return -1.0 / (4.0 * std::numbers::pi * r);
}

namespace detail {
inline std::atomic<double>& kernel_scale_storage() {
  static std::atomic<double> scale{1.0};
  return scale;
}
}  // namespace detail

/// Multiplies the kernel normalisation; only the mutation check of the verify driver
/// changes it.
inline void set_kernel_scale_for_testing(double s) { detail::kernel_scale_storage().store(s); }
inline double kernel_scale() { return detail::kernel_scale_storage().load(); }

/// Gamma and Gamma_i sampled on all lattice offsets x - y of a grid, i.e. a grid of
/// 2n-1 nodes per axis with the same spacing. Entries are already divided so that
/// convolution sums multiply by h^d.
class KernelTable {
 public:
  KernelTable() = default;

  explicit KernelTable(const GridSpec& grid, double scale = kernel_scale()) : grid_(grid), scale_(scale) {
    grid.validate();
    const GridSpec og = offset_grid();
    gamma_ = Field(og, Rank::scalar);
    grad_ = Field(og, Rank::vector);
    const int d = grid.d;
    const double h = grid.h();
    const double norm = scale / (d * unit_ball_volume(d));
    for (std::size_t q = 0; q < og.points(); ++q) {
      const Index3 c = og.coords(q);
      std::array<double, 3> z{0.0, 0.0, 0.0};
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        z[a] = static_cast<double>(c[a] - (grid.n - 1)) * h;
        r2 += z[a] * z[a];
      }
      if (r2 == 0.0) {
        gamma_(0, q) = scale * self_cell_integral(grid) / grid.cell_volume();
        for (int a = 0; a < d; ++a) grad_(a, q) = 0.0;
        continue;
      }
      const double r = std::sqrt(r2);
      gamma_(0, q) = scale * newton_kernel(r, d);
      const double rd = std::pow(r, d);
      for (int a = 0; a < d; ++a) grad_(a, q) = norm * z[a] / rd;
    }
    build_hessian();
  }

  /// Exact integral of Gamma over the ball of volume h^d centred at the singularity.
  static double self_cell_integral(const GridSpec& g) {
    const double h = g.h();
    if (g.d == 2) {
      const double a = h / std::sqrt(std::numbers::pi);
      return 0.5 * a * a * std::log(a) - 0.25 * a * a;
    }
    const double a = std::cbrt(3.0 * h * h * h / (4.0 * std::numbers::pi));
    return -0.5 * a * a;
  }

  const GridSpec& grid() const { return grid_; }
  GridSpec offset_grid() const { return GridSpec{grid_.d, 2.0 * grid_.L, 2 * grid_.n - 1}; }
  double scale() const { return scale_; }
  const Field& gamma() const { return gamma_; }
  const Field& grad() const { return grad_; }
  /// Principal-value part of d_i d_j Gamma, (delta_ij |z|^2 - d z_i z_j) / (d omega_d |z|^{d+2});
  /// the self cell is 0 and the delta_ij / d point mass is left to the caller.
  const Field& hessian() const { return hess_; }

  /// Table entry for lattice offset (x - y) / h = m.
  std::size_t offset_index(const Index3& m) const {
    Index3 c{0, 0, 0};
    for (int a = 0; a < grid_.d; ++a) c[a] = m[a] + grid_.n - 1;
    return offset_grid().index(c);
  }

  static std::string cache_stem(const GridSpec& g) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "kernel_d%d_n%d_L%.17g", g.d, g.n, g.L);
    return buf;
  }

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    io::write_binary(gamma_, dir / (cache_stem(grid_) + "_gamma.lgfd"));
    io::write_binary(grad_, dir / (cache_stem(grid_) + "_grad.lgfd"));
  }

  /// Loads a cached table when present (and matching), else builds and stores it.
  static KernelTable load_or_build(const GridSpec& g, const std::filesystem::path& dir) {
    const auto gpath = dir / (cache_stem(g) + "_gamma.lgfd");
    const auto vpath = dir / (cache_stem(g) + "_grad.lgfd");
    if (kernel_scale() == 1.0 && std::filesystem::exists(gpath) && std::filesystem::exists(vpath)) {
      KernelTable t;
      t.grid_ = g;
      t.scale_ = 1.0;
      t.gamma_ = io::read_binary(gpath);
      t.grad_ = io::read_binary(vpath);
      if (t.gamma_.grid() == t.offset_grid() && t.grad_.grid() == t.offset_grid()) {
        t.build_hessian();
        return t;
      }
    }
    KernelTable t(g);
    if (t.scale_ == 1.0) t.save(dir);
    return t;
  }

 private:
  void build_hessian() {
    const GridSpec og = offset_grid();
    const int d = grid_.d;
    const double h = grid_.h();
    const double norm = scale_ / (d * unit_ball_volume(d));
    hess_ = Field(og, Rank::matrix);
    for (std::size_t q = 0; q < og.points(); ++q) {
      const Index3 c = og.coords(q);
      std::array<double, 3> z{0.0, 0.0, 0.0};
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        z[a] = static_cast<double>(c[a] - (grid_.n - 1)) * h;
        r2 += z[a] * z[a];
      }
      if (r2 == 0.0) continue;
      const double rd2 = std::pow(r2, 0.5 * d + 1.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          hess_(i * d + j, q) = norm * ((i == j ? r2 : 0.0) - d * z[i] * z[j]) / rd2;
    }
  }

  GridSpec grid_{};
  double scale_ = 1.0;
  Field gamma_;
  Field grad_;
  Field hess_;
};

/// Discrete linear convolution with the kernel table through zero-padded FFTs
/// (2n per axis, so the circular product equals the direct lattice sum).
class Convolver {
 public:
  explicit Convolver(const KernelTable& table) : grid_(table.grid()), scale_(table.scale()) {
    const int d = grid_.d;
    const int m = 2 * grid_.n;
    dims_.assign(static_cast<std::size_t>(d), m);
    transform_ = fft::transform_for(dims_);
    const int kernels = 1 + d + d * d;
    spectra_.resize(static_cast<std::size_t>(kernels));
    auto buf = fft::alloc_real(transform_->real_size());
    const GridSpec og = table.offset_grid();
    for (int k = 0; k < kernels; ++k) {
      std::fill(buf.get(), buf.get() + transform_->real_size(), 0.0);
      const auto [src_ptr, comp] = kernel_source(table, k);
      const Field& src = *src_ptr;
      for (std::size_t q = 0; q < og.points(); ++q) {
        const Index3 c = og.coords(q);
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) {
          const int off = c[a] - (grid_.n - 1);
          idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>((off + m) % m);
        }
        buf[idx] = src(comp, q);
      }
      spectra_[static_cast<std::size_t>(k)] = fft::alloc_complex(transform_->complex_size());
      transform_->forward(buf.get(), spectra_[static_cast<std::size_t>(k)].get());
    }
  }

  const GridSpec& grid() const { return grid_; }
  double scale() const { return scale_; }

  /// Kernel index: 0 = Gamma, 1 + i = Gamma_i, 1 + d + i d + j = PV Gamma_ij.
  static int hessian_kernel(int d, int i, int j) { return 1 + d + i * d + j; }

  static std::pair<const Field*, int> kernel_source(const KernelTable& t, int k) {
    const int d = t.grid().d;
    if (k == 0) return {&t.gamma(), 0};
    if (k <= d) return {&t.grad(), k - 1};
    return {&t.hessian(), k - 1 - d};
  }

  struct Term {
    int kernel;
    std::span<const double> values;
  };

  /// sum over terms of (kernel * values) h^d, evaluated on the grid.
  std::vector<double> apply(std::span<const Term> terms) const {
    const std::size_t cs = transform_->complex_size();
    auto acc = fft::alloc_complex(cs);
    std::fill(&acc[0][0], &acc[0][0] + 2 * cs, 0.0);
    auto pad = fft::alloc_real(transform_->real_size());
    auto spec = fft::alloc_complex(cs);
    for (const Term& t : terms) {
      pad_into(t.values, pad.get());
      transform_->forward(pad.get(), spec.get());
      const auto& ker = spectra_[static_cast<std::size_t>(t.kernel)];
      for (std::size_t k = 0; k < cs; ++k) {
        const double ar = spec[k][0], ai = spec[k][1];
        const double br = ker[k][0], bi = ker[k][1];
        acc[k][0] += ar * br - ai * bi;
        acc[k][1] += ar * bi + ai * br;
      }
    }
    transform_->backward(acc.get(), pad.get());
    const double norm = grid_.cell_volume() / static_cast<double>(transform_->real_size());
    std::vector<double> out(grid_.points());
    extract_from(pad.get(), out, norm);
    return out;
  }

  std::vector<double> apply(int kernel, std::span<const double> values) const {
    const Term t{kernel, values};
    return apply(std::span<const Term>(&t, 1));
  }

 private:
  void pad_into(std::span<const double> values, double* pad) const {
    std::fill(pad, pad + transform_->real_size(), 0.0);
    const int m = 2 * grid_.n;
    for (std::size_t q = 0; q < grid_.points(); ++q) {
      const Index3 c = grid_.coords(q);
      std::size_t idx = 0;
      for (int a = 0; a < grid_.d; ++a) idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>(c[a]);
      pad[idx] = values[q];
    }
  }

  void extract_from(const double* pad, std::span<double> out, double norm) const {
    const int m = 2 * grid_.n;
    for (std::size_t q = 0; q < grid_.points(); ++q) {
      const Index3 c = grid_.coords(q);
      std::size_t idx = 0;
      for (int a = 0; a < grid_.d; ++a) idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>(c[a]);
      out[q] = pad[idx] * norm;
    }
  }

  GridSpec grid_{};
  double scale_ = 1.0;
  std::vector<int> dims_;
  std::shared_ptr<const fft::RealTransform> transform_;
  std::vector<fft::Buffer<fftw_complex>> spectra_;
};

/// Process-wide convolver per grid (and current kernel scale).
inline std::shared_ptr<const Convolver> convolver_for(const GridSpec& g) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const Convolver>> cache;
  const auto key = std::make_tuple(g.d, g.n, g.L, kernel_scale());
  {
    std::lock_guard lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto c = std::make_shared<const Convolver>(KernelTable(g));
  std::lock_guard lock(m);
  return cache.emplace(key, c).first->second;
}

/// O(n^{2d}) lattice sum with the table; reference for the FFT route and small grids.
inline std::vector<double> convolve_direct(const KernelTable& table, int kernel, std::span<const double> values) {
  const GridSpec& g = table.grid();
  const auto [src_ptr, comp] = Convolver::kernel_source(table, kernel);
  const Field& src = *src_ptr;
  std::vector<double> out(g.points(), 0.0);
  std::vector<double> terms(g.points());
  for (std::size_t x = 0; x < g.points(); ++x) {
    const Index3 cx = g.coords(x);
    for (std::size_t y = 0; y < g.points(); ++y) {
      const Index3 cy = g.coords(y);
      Index3 m{0, 0, 0};
      for (int a = 0; a < g.d; ++a) m[a] = cx[a] - cy[a];
      terms[y] = src(comp, table.offset_index(m)) * values[y];
    }
    out[x] = pairwise_sum(terms) * g.cell_volume();
  }
  return out;
}

// ---------------------------------------------------------------------------

inline Field newton_potential(const Field& f) {
  require(f.rank() == Rank::scalar, ErrorCode::invalid_argument, "newton_potential takes a scalar field");
  const auto conv = convolver_for(f.grid());
  return Field(f.grid(), Rank::scalar, conv->apply(0, f.component(0)));
}

/// Analytic continuation of sum'_{m in Z^3} |m|^{-s} to s = 1 (simple cubic lattice).
inline constexpr double kCubicLatticeConstant = -2.8372974794806;

/// Coefficient c_d of the local correction h^2 c_d d_i f that the punctured sum with
/// Gamma_i(0) = 0 misses at leading order.
inline double punctured_correction(int d) {
  return d == 2 ? -1.0 / (4.0 * std::numbers::pi) : kCubicLatticeConstant / (12.0 * std::numbers::pi);
}

/// T_i f = sum_y Gamma_i(x - y) f(y) h^d + h^2 c_d d_i f.
inline Field t_op(const Field& f, int axis) {
  require(f.rank() == Rank::scalar, ErrorCode::invalid_argument, "t_op takes a scalar field");
  require(axis >= 0 && axis < f.grid().d, ErrorCode::invalid_argument, "axis out of range");
  const GridSpec& g = f.grid();
  const auto conv = convolver_for(g);
  Field out(g, Rank::scalar, conv->apply(1 + axis, f.component(0)));
  const double c = conv->scale() * punctured_correction(g.d) * g.h() * g.h();
  const Field df = partial4(f, axis);
  for (std::size_t q = 0; q < g.points(); ++q) out(0, q) += c * df(0, q);
  return out;
}

/// sum_i T_i f_i for scalar fields f_0..f_{d-1} sharing one grid, with a single
/// inverse transform.
inline Field t_sum(std::span<const Field> f) {
  require(!f.empty(), ErrorCode::invalid_argument, "t_sum needs at least one field");
  const GridSpec& g = f.front().grid();
  require(static_cast<int>(f.size()) <= g.d, ErrorCode::invalid_argument, "t_sum takes at most d fields");
  const auto conv = convolver_for(g);
  std::vector<Convolver::Term> terms;
  for (std::size_t i = 0; i < f.size(); ++i) {
    require(f[i].rank() == Rank::scalar && f[i].grid() == g, ErrorCode::invalid_argument,
            "t_sum takes scalar fields on one grid");
    terms.push_back({1 + static_cast<int>(i), f[i].component(0)});
  }
  Field out(g, Rank::scalar, conv->apply(terms));
  const double c = conv->scale() * punctured_correction(g.d) * g.h() * g.h();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Field df = partial4(f[i], static_cast<int>(i));
    for (std::size_t q = 0; q < g.points(); ++q) out(0, q) += c * df(0, q);
  }
  return out;
}

/// max |f| on the boundary relative to max |f|; decaying inputs stay below 1e-6.
inline double boundary_ratio(const Field& f) {
  const GridSpec& g = f.grid();
  const double peak = f.max_abs();
  if (peak == 0.0) return 0.0;
  double b = 0.0;
  for (std::size_t q = 0; q < g.points(); ++q) {
    const Index3 c = g.coords(q);
    bool edge = false;
    for (int a = 0; a < g.d; ++a) edge = edge || c[a] == 0 || c[a] == g.n - 1;
    if (!edge) continue;
    for (int k = 0; k < f.components(); ++k) b = std::max(b, std::abs(f(k, q)));
  }
  return b / peak;
}

inline constexpr double kBoundaryDecayTolerance = 1e-6;

struct ProjectionPair {
  Field gradient_part;
  Field solenoidal_part;
};

enum class ProjectionMethod { quadrature, spectral };

inline const char* to_string(ProjectionMethod m) { return m == ProjectionMethod::quadrature ? "quadrature" : "spectral"; }

/// Smooth window equal to 1 for |x_a| <= (1 - band) L, falling to 0 at the faces.
inline double taper(const GridSpec& g, const Point& x, double band = 0.15) {
  double w = 1.0;
  for (int a = 0; a < g.d; ++a) {
    const double s = std::abs(x[a]);
    const double start = (1.0 - band) * g.L;
    if (s <= start) continue;
    const double t = std::min(1.0, (s - start) / (g.L - start));
    const double c = std::cos(0.5 * std::numbers::pi * t);
    w *= c * c;
  }
  return w;
}

namespace detail {

/// G(v)^j = sum_i T_i (d_j v^i), derivatives at fourth order.
inline Field gradient_part_quadrature(const Field& v) {
  const GridSpec& g = v.grid();
  const int d = g.d;
  const auto conv = convolver_for(g);
  const double c = conv->scale() * punctured_correction(d) * g.h() * g.h();
  std::vector<Field> dv;  // dv[i] = grad v^i
  for (int i = 0; i < d; ++i) {
    const Field vi = component_field(v, i);
    Field gi(g, Rank::vector);
    for (int j = 0; j < d; ++j) {
      const Field dj = partial4(vi, j);
      std::copy(dj.values().begin(), dj.values().end(), gi.component(j).begin());
    }
    dv.push_back(std::move(gi));
  }
  Field out(g, Rank::vector);
  for (int j = 0; j < d; ++j) {
    std::vector<Convolver::Term> terms;
    for (int i = 0; i < d; ++i) terms.push_back({1 + i, dv[static_cast<std::size_t>(i)].component(j)});
    const auto gj = conv->apply(terms);
    auto dst = out.component(j);
    std::copy(gj.begin(), gj.end(), dst.begin());
    for (int i = 0; i < d; ++i) {
      const Field dij = partial4(component_field(dv[static_cast<std::size_t>(i)], j), i);
      for (std::size_t q = 0; q < g.points(); ++q) dst[q] += c * dij(0, q);
    }
  }
  return out;
}

inline Field gradient_part_spectral(const Field& v) {
  const GridSpec& g = v.grid();
  const int d = g.d;
  const int n = g.n;
  std::vector<int> dims(static_cast<std::size_t>(d), n);
  const auto tr = fft::transform_for(dims);
  const std::size_t cs = tr->complex_size();
  std::vector<fft::Buffer<fftw_complex>> spec;
  auto buf = fft::alloc_real(tr->real_size());
  for (int i = 0; i < d; ++i) {
    for (std::size_t q = 0; q < g.points(); ++q) buf[q] = v(i, q) * taper(g, g.point(q));
    spec.push_back(fft::alloc_complex(cs));
    tr->forward(buf.get(), spec.back().get());
  }
  const double period = static_cast<double>(n) * g.h();
  const int last = n / 2 + 1;
  auto wavenumber = [&](int k, bool is_last_axis) {
    if (!is_last_axis && k > n / 2) k -= n;
    if (n % 2 == 0 && std::abs(k) == n / 2) return 0.0;  // drop Nyquist
    return 2.0 * std::numbers::pi * k / period;
  };
  std::vector<fft::Buffer<fftw_complex>> out_spec;
  for (int j = 0; j < d; ++j) {
    out_spec.push_back(fft::alloc_complex(cs));
    std::fill(&out_spec.back()[0][0], &out_spec.back()[0][0] + 2 * cs, 0.0);
  }
  for (std::size_t k = 0; k < cs; ++k) {
    std::array<int, 3> kk{0, 0, 0};
    std::size_t r = k;
    kk[static_cast<std::size_t>(d - 1)] = static_cast<int>(r % static_cast<std::size_t>(last));
    r /= static_cast<std::size_t>(last);
    for (int a = d - 2; a >= 0; --a) {
      kk[static_cast<std::size_t>(a)] = static_cast<int>(r % static_cast<std::size_t>(n));
      r /= static_cast<std::size_t>(n);
    }
    std::array<double, 3> xi{0.0, 0.0, 0.0};
    double xi2 = 0.0;
    for (int a = 0; a < d; ++a) {
      xi[static_cast<std::size_t>(a)] = wavenumber(kk[static_cast<std::size_t>(a)], a == d - 1);
      xi2 += xi[static_cast<std::size_t>(a)] * xi[static_cast<std::size_t>(a)];
    }
    if (xi2 == 0.0) continue;
    double re = 0.0, im = 0.0;  // xi . v_hat
    for (int i = 0; i < d; ++i) {
      re += xi[static_cast<std::size_t>(i)] * spec[static_cast<std::size_t>(i)][k][0];
      im += xi[static_cast<std::size_t>(i)] * spec[static_cast<std::size_t>(i)][k][1];
    }
    for (int j = 0; j < d; ++j) {
      const double m = xi[static_cast<std::size_t>(j)] / xi2;
      out_spec[static_cast<std::size_t>(j)][k][0] = m * re;
      out_spec[static_cast<std::size_t>(j)][k][1] = m * im;
    }
  }
  Field out(g, Rank::vector);
  const double norm = 1.0 / static_cast<double>(tr->real_size());
  for (int j = 0; j < d; ++j) {
    tr->backward(out_spec[static_cast<std::size_t>(j)].get(), buf.get());
    for (std::size_t q = 0; q < g.points(); ++q) out(j, q) = buf[q] * norm;
  }
  return out;
}

}  // namespace detail

/// Helmholtz split v = G(v) + S(v) with S(v) defined as v - G(v).
inline ProjectionPair project(const Field& v, ProjectionMethod method = ProjectionMethod::quadrature) {
  require(v.rank() == Rank::vector, ErrorCode::invalid_argument, "project takes a vector field");
  v.grid().validate();
  ProjectionPair pair;
  pair.gradient_part =
      method == ProjectionMethod::quadrature ? detail::gradient_part_quadrature(v) : detail::gradient_part_spectral(v);
  pair.solenoidal_part = v - pair.gradient_part;
  return pair;
}

inline Field solenoidal(const Field& v, ProjectionMethod method = ProjectionMethod::quadrature) {
  return project(v, method).solenoidal_part;
}

/// S(v)^j = sum_i T_i (d_i v^j - d_j v^i). Equal to v - G(v) for decaying v, but
/// only the curl of v enters, so a slowly decaying tail cut off by the box does
/// not pollute the result.
inline Field solenoidal_curl(const Field& v) {
  require(v.rank() == Rank::vector, ErrorCode::invalid_argument, "solenoidal_curl takes a vector field");
  const GridSpec& g = v.grid();
  const int d = g.d;
  const Field J = gradient4(v);  // (i, j) = d_j v^i
  Field out(g, Rank::vector);
  for (int j = 0; j < d; ++j) {
    std::vector<Field> f;
    for (int i = 0; i < d; ++i) {
      Field w(g, Rank::scalar);
      for (std::size_t q = 0; q < g.points(); ++q) w(0, q) = J(j * d + i, q) - J(i * d + j, q);
      f.push_back(std::move(w));
    }
    const Field sj = t_sum(f);
    std::copy(sj.values().begin(), sj.values().end(), out.component(j).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

struct BoundednessTable {
  std::vector<double> ratios;  ///< sorted ascending
  double max = 0.0;
  double median = 0.0;
  int skipped = 0;  ///< zero members
};

/// |T_i f|_{H^{l+1}_{theta+l,p}} / |f|_{H^l_{theta+l,p}} per corpus member, maximised over i.
inline BoundednessTable boundedness_probe(std::span<const Field> corpus, const SpaceParams& space, int l) {
  BoundednessTable table;
  const double delta = space.theta + l;
  const NormSpec in_spec{space, l, delta, space.p};
  const NormSpec out_spec{space, l + 1, delta, space.p};
  for (const Field& f : corpus) {
    const double fn = sobolev_norm(f, in_spec).total;
    if (fn < 1e-14) {
      ++table.skipped;
      continue;
    }
    double best = 0.0;
    for (int i = 0; i < f.grid().d; ++i) best = std::max(best, sobolev_norm(t_op(f, i), out_spec).total / fn);
    table.ratios.push_back(best);
  }
  std::sort(table.ratios.begin(), table.ratios.end());
  if (!table.ratios.empty()) {
    table.max = table.ratios.back();
    const std::size_t m = table.ratios.size();
    table.median = (m % 2) ? table.ratios[m / 2] : 0.5 * (table.ratios[m / 2 - 1] + table.ratios[m / 2]);
  }
  return table;
}

}  // namespace lagflow
