#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/core/numerics.hpp"
#include "swave/noise/hilbert.hpp"

namespace swave {

// Element of the discrete H_T: piecewise constant in time, h(s) =
// sum_i coeff(j, i) e_i for s in (t_j, t_{j+1}].
struct ShiftDirection {
  std::size_t steps = 0;
  std::size_t basis_size = 0;
  double dt = 0.0;
  std::vector<double> coeff;

  ShiftDirection() = default;
  ShiftDirection(std::size_t n_steps, std::size_t n_basis, double step)
      : steps(n_steps), basis_size(n_basis), dt(step),
        coeff(n_steps * n_basis, 0.0) {
    if (!(step > 0.0)) throw std::invalid_argument("direction needs dt > 0");
  }

  double& at(std::size_t j, std::size_t i) { return coeff[j * basis_size + i]; }
  double at(std::size_t j, std::size_t i) const {
    return coeff[j * basis_size + i];
  }
  std::span<const double> row(std::size_t j) const {
    return {coeff.data() + j * basis_size, basis_size};
  }
  std::span<double> row(std::size_t j) {
    return {coeff.data() + j * basis_size, basis_size};
  }

  double norm_sq() const {
    CompensatedSum acc;
    for (double c : coeff) acc.add(c * c * dt);
    return acc.value();
  }
  double norm() const { return std::sqrt(norm_sq()); }

  bool is_zero() const {
    for (double c : coeff)
      if (c != 0.0) return false;
    return true;
  }

  // First step with a nonzero coefficient, or `steps` when zero.
  std::size_t first_active_step() const {
    for (std::size_t j = 0; j < steps; ++j)
      for (double c : row(j))
        if (c != 0.0) return j;
    return steps;
  }

  ShiftDirection scaled(double c) const {
    ShiftDirection out = *this;
    for (double& v : out.coeff) v *= c;
    return out;
  }

  void require_compatible(const ShiftDirection& o) const {
    if (steps != o.steps || basis_size != o.basis_size || dt != o.dt)
      throw GridMismatch("directions live on different discretizations");
  }
};

inline ShiftDirection zero_direction(const ConsBasis& basis, const TimeGrid& time) {
  return ShiftDirection(time.steps, basis.size(), time.dt);
}

inline double inner_ht(const ShiftDirection& a, const ShiftDirection& b) {
  a.require_compatible(b);
  CompensatedSum acc;
  for (std::size_t n = 0; n < a.coeff.size(); ++n)
    acc.add(a.coeff[n] * b.coeff[n] * a.dt);
  return acc.value();
}

// 1_{(t_first, t_last]} phi as an H_T element.
inline ShiftDirection window_direction(const ConsBasis& basis, const TimeGrid& time,
                                       std::size_t first, std::size_t last,
                                       std::span<const double> phi) {
  if (first >= last || last > time.steps)
    throw std::invalid_argument("time window must satisfy first < last <= steps");
  ShiftDirection h(time.steps, basis.size(), time.dt);
  auto c = basis.project(phi);
  for (std::size_t j = first; j < last; ++j)
    std::copy(c.begin(), c.end(), h.row(j).begin());
  return h;
}

// Indicator of a set of lattice points as a lattice function.
inline std::vector<double> indicator(const TorusGrid& grid,
                                     std::span<const std::size_t> points) {
  if (points.empty()) throw std::invalid_argument("indicator of an empty set");
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t p : points) {
    if (p >= grid.size()) throw std::out_of_range("lattice point out of range");
    out[p] = 1.0;
  }
  return out;
}

// Noise mass F(h) = sum_{j,i} h_{j,i} dW^i_j.
inline double noise_mass(const ShiftDirection& h, const ConsBasis& basis,
                         const NoiseIncrements& noise) {
  if (h.basis_size != basis.size() || h.steps != noise.time.steps)
    throw GridMismatch("direction does not match the noise discretization");
  CompensatedSum acc;
  for (std::size_t j = 0; j < h.steps; ++j) {
    auto c = h.row(j);
    bool any = false;
    for (double v : c) any |= v != 0.0;
    if (!any) continue;
    auto dw = basis.increments(noise, j);
    for (std::size_t i = 0; i < c.size(); ++i) acc.add(c[i] * dw[i]);
  }
  return acc.value();
}

// Cameron-Martin shift: dW^i_j -> dW^i_j + eps * h_{j,i} * dt.
inline NoiseIncrements shift_noise(const NoiseIncrements& noise,
                                   const ConsBasis& basis, const ShiftDirection& h,
                                   double eps) {
  if (h.basis_size != basis.size() || h.steps != noise.time.steps)
    throw GridMismatch("direction does not match the noise discretization");
  basis.grid().require_same(noise.grid, "noise shift");
  NoiseIncrements out = noise;
  if (eps == 0.0) return out;
  for (std::size_t j = 0; j < h.steps; ++j) {
    auto c = h.row(j);
    auto row = out.step(j);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] == 0.0) continue;
      const auto& e = basis.element(i);
      const double d = eps * c[i] * h.dt;
      switch (e.kind) {
        case ConsBasis::Kind::origin: row[e.mode] += d; break;
        case ConsBasis::Kind::cosine: row[e.mode] += d / std::numbers::sqrt2; break;
        case ConsBasis::Kind::sine:
          row[e.mode] += cplx(0.0, -d / std::numbers::sqrt2);
          break;
      }
    }
    const TorusGrid& g = noise.grid;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.is_canonical(k) && g.pair(k) != k) row[g.pair(k)] = std::conj(row[k]);
  }
  return out;
}

}  // namespace swave
