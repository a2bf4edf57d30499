#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "swave/core/fft.hpp"
#include "swave/kernels/mollifier.hpp"
#include "swave/kernels/wave_kernel.hpp"

namespace swave {

// FG(lag)(xi_k) * zeta(xi_k) on every mode.
template <RadialKernel K>
std::vector<double> kernel_multiplier(const K& kernel, const TorusGrid& grid,
                                      std::span<const double> zeta, double lag) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (zeta[k] != 0.0) out[k] = kernel.ft(lag, grid.radius(k)) * zeta[k];
  return out;
}

// Lattice function of the mollified kernel at a time lag:
// lambda(z) = L^-d sum_k FG(lag)(xi_k) zeta_k exp(2 pi i xi_k . z).
template <RadialKernel K>
std::vector<double> kernel_lattice(const K& kernel, const TorusGrid& grid,
                                   std::span<const double> zeta, double lag) {
  auto mult = kernel_multiplier(kernel, grid, zeta, lag);
  std::vector<cplx> spec(mult.begin(), mult.end());
  Fft(grid).backward(spec);
  std::vector<double> out(grid.size());
  const double inv_vol = 1.0 / grid.volume();
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = spec[m].real() * inv_vol;
  return out;
}

// Re sum_k spec_k exp(2 pi i xi_k . z_x) for one lattice point x.
inline double synthesize_at(const TorusGrid& grid, std::span<const cplx> spec,
                            std::size_t x) {
  CompensatedSum acc;
  const int n = grid.side();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (spec[k] == cplx(0.0)) continue;
    long phase = 0;
    for (int a = 0; a < grid.dim(); ++a)
      phase += static_cast<long>(grid.slot(k, a)) * grid.slot(x, a);
    double ang = 2.0 * std::numbers::pi * static_cast<double>(phase % n) / n;
    acc.add(spec[k].real() * std::cos(ang) - spec[k].imag() * std::sin(ang));
  }
  return acc.value();
}

// Accumulates sum_j weight_j FG(t - node_j)(xi_k) F_j(k) for later
// evaluation at any t not before the last node.  For the wave kernel the
// sine addition formula reduces the history to two spectra; other kernels
// keep the full history.
template <RadialKernel K>
class SpectralHistory {
 public:
  SpectralHistory(const K& kernel, const TorusGrid& grid, std::vector<double> zeta,
                  bool force_direct = false)
      : kernel_(kernel), grid_(grid), zeta_(std::move(zeta)),
        direct_(force_direct || !is_wave_kernel_v<K>) {
    if (zeta_.size() != grid.size())
      throw GridMismatch("mollifier multiplier length does not match the grid");
    radius_ = grid.radii();
    // Trig values are shared by all modes of equal radius.
    std::unordered_map<double, std::size_t> index;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      auto [it, fresh] = index.try_emplace(radius_[k], unique_.size());
      if (fresh) unique_.push_back(radius_[k]);
      shell_.push_back(it->second);
    }
    cos_.resize(unique_.size());
    sin_.resize(unique_.size());
    if (!direct_) {
      cos_acc_.assign(grid.size(), cplx(0.0));
      sin_acc_.assign(grid.size(), cplx(0.0));
    }
  }

  bool direct() const noexcept { return direct_; }
  double last_node() const noexcept { return last_; }

  void push(double node, std::span<const cplx> spectrum, double weight = 1.0) {
    if (spectrum.size() != grid_.size())
      throw GridMismatch("spectrum length does not match the grid");
    last_ = std::max(last_, node);
    if (direct_) {
      nodes_.push_back(node);
      std::vector<cplx> row(spectrum.size());
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = weight * spectrum[k];
      history_.push_back(std::move(row));
      return;
    }
    fill_trig(node);
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      if (zeta_[k] == 0.0) continue;
      const cplx f = weight * spectrum[k];
      if (radius_[k] == 0.0) {
        cos_acc_[k] += f;
        sin_acc_[k] += node * f;
      } else {
        cos_acc_[k] += cos_[shell_[k]] * f;
        sin_acc_[k] += sin_[shell_[k]] * f;
      }
    }
  }

  // zeta_k * sum_j weight_j FG(t - node_j)(xi_k) F_j(k).
  void evaluate(double t, std::span<cplx> out) const {
    if (out.size() != grid_.size())
      throw GridMismatch("output length does not match the grid");
    if (t < last_) throw std::invalid_argument("history evaluated before its last node");
    std::fill(out.begin(), out.end(), cplx(0.0));
    if (direct_) {
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        const double lag = t - nodes_[j];
        const auto& row = history_[j];
        for (std::size_t k = 0; k < grid_.size(); ++k)
          if (zeta_[k] != 0.0 && row[k] != cplx(0.0))
            out[k] += kernel_.ft(lag, radius_[k]) * row[k];
      }
    } else {
      fill_trig(t);
      for (std::size_t k = 0; k < grid_.size(); ++k) {
        if (zeta_[k] == 0.0) continue;
        if (radius_[k] == 0.0) {
          out[k] = t * cos_acc_[k] - sin_acc_[k];
        } else {
          const double w = 2.0 * std::numbers::pi * radius_[k];
          out[k] = (sin_[shell_[k]] * cos_acc_[k] - cos_[shell_[k]] * sin_acc_[k]) / w;
        }
      }
    }
    for (std::size_t k = 0; k < grid_.size(); ++k) out[k] *= zeta_[k];
  }

 private:
  void fill_trig(double t) const {
    for (std::size_t u = 0; u < unique_.size(); ++u) {
      const double ang = 2.0 * std::numbers::pi * t * unique_[u];
      cos_[u] = std::cos(ang);
      sin_[u] = std::sin(ang);
    }
  }

  K kernel_;
  TorusGrid grid_;
  std::vector<double> zeta_;
  std::vector<double> radius_;
  std::vector<double> unique_;
  std::vector<std::size_t> shell_;
  mutable std::vector<double> cos_, sin_;
  bool direct_;
  double last_ = 0.0;
  std::vector<cplx> cos_acc_, sin_acc_;
  std::vector<double> nodes_;
  std::vector<std::vector<cplx>> history_;
};

}  // namespace swave
