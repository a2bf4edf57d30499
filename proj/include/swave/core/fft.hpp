#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "swave/core/grid.hpp"

namespace swave {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution on new arrays is.  Plans are
// created in-place and unaligned so any buffer of the right length works.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const std::vector<int>& dims, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t n = 1;
    for (int v : dims) n *= static_cast<std::size_t>(v);
    std::vector<cplx> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan =
        fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf,
                      sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<std::vector<int>, int>, fftw_plan> plans_;
};

}  // namespace detail

// Unnormalized d-dimensional DFTs on the grid lattice.
class Fft {
 public:
  explicit Fft(const TorusGrid& grid)
      : size_(grid.size()),
        forward_(detail::PlanCache::instance().get(grid.dims(), FFTW_FORWARD)),
        backward_(
            detail::PlanCache::instance().get(grid.dims(), FFTW_BACKWARD)) {}

  std::size_t size() const noexcept { return size_; }

  // x_k = sum_m f_m exp(-2 pi i k.m / N), in place.
  void forward(std::span<cplx> data) const { run(forward_, data); }
  // f_m = sum_k x_k exp(+2 pi i k.m / N), in place, no 1/M factor.
  void backward(std::span<cplx> data) const { run(backward_, data); }

  std::vector<cplx> forward_real(std::span<const double> f) const {
    std::vector<cplx> out(f.begin(), f.end());
    check(out.size());
    forward(out);
    return out;
  }

  void forward_real(std::span<const double> f, std::span<cplx> out) const {
    check(f.size());
    check(out.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
    forward(out);
  }

  // Real part of the normalized inverse transform.
  void inverse_to_real(std::span<cplx> spectrum, std::span<double> out) const {
    check(out.size());
    backward(spectrum);
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t i = 0; i < size_; ++i) out[i] = spectrum[i].real() * scale;
  }

 private:
  void check(std::size_t n) const {
    if (n != size_) throw std::invalid_argument("FFT buffer length mismatch");
  }

  void run(fftw_plan plan, std::span<cplx> data) const {
    check(data.size());
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
  }

  std::size_t size_;
  fftw_plan forward_;
  fftw_plan backward_;
};

}  // namespace swave
