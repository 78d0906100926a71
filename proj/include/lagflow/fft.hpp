#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "lagflow/error.hpp"

namespace lagflow::fft {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using Buffer = std::unique_ptr<T[], FftwFree>;

inline Buffer<double> alloc_real(std::size_t n) {
  return Buffer<double>(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}
inline Buffer<fftw_complex> alloc_complex(std::size_t n) {
  return Buffer<fftw_complex>(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Forward/backward real transform pair of a fixed shape. Planning is serialised;
/// execute() on distinct buffers is safe from several threads.
class RealTransform {
 public:
  explicit RealTransform(std::vector<int> dims) : dims_(std::move(dims)) {
    real_size_ = 1;
    for (int n : dims_) real_size_ *= static_cast<std::size_t>(n);
    complex_size_ = real_size_ / static_cast<std::size_t>(dims_.back()) * static_cast<std::size_t>(dims_.back() / 2 + 1);
    auto in = alloc_real(real_size_);
    auto out = alloc_complex(complex_size_);
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c(static_cast<int>(dims_.size()), dims_.data(), in.get(), out.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(static_cast<int>(dims_.size()), dims_.data(), out.get(), in.get(), FFTW_ESTIMATE);
    require(forward_ != nullptr && backward_ != nullptr, ErrorCode::invalid_argument, "FFTW planning failed");
  }

  RealTransform(const RealTransform&) = delete;
  RealTransform& operator=(const RealTransform&) = delete;

  ~RealTransform() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }
  const std::vector<int>& dims() const { return dims_; }

  /// Inputs must come from alloc_real / alloc_complex. backward() is unnormalised and
  /// overwrites its complex input.
  void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
  void backward(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(backward_, in, out); }

 private:
  std::vector<int> dims_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Shared transform for a shape, created on first use.
inline std::shared_ptr<const RealTransform> transform_for(const std::vector<int>& dims) {
  static std::mutex cache_mutex;
  static std::map<std::vector<int>, std::shared_ptr<const RealTransform>> cache;
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(dims);
  if (it != cache.end()) return it->second;
  auto t = std::make_shared<const RealTransform>(dims);
  cache.emplace(dims, t);
  return t;
}

}  // namespace lagflow::fft
