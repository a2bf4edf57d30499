#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/integrals/adapted.hpp"
#include "swave/integrals/kernel_window.hpp"
#include "swave/noise/shift.hpp"

namespace swave {

// Evaluation point (t_step, z_point) on the space-time lattice.
struct Target {
  std::size_t step = 0;
  std::size_t point = 0;
};

inline Target make_target(const TorusGrid& grid, const TimeGrid& time, double t,
                          std::size_t point) {
  if (point >= grid.size()) throw std::out_of_range("target point outside the lattice");
  return {time.index_of(t), point};
}

// Trapezoid weights of the pathwise time integral on [0, t_i].
inline double pathwise_weight(const TimeGrid& time, std::size_t j, std::size_t i) {
  if (j > i || i == 0) return 0.0;
  return (j == 0 || j == i) ? 0.5 * time.dt : time.dt;
}

// ------------------------------------------------------- stochastic (CD)

// sum_{j<i} [ G_n(t_i - s_j) * (Z_j dM_j) ](x) with s_j the step midpoint,
// every convolution taken in Fourier space.
template <RadialKernel K>
double cd_integral(const K& kernel, const Mollifier& moll, const AdaptedIntegrand& z,
                   const NoiseIncrements& noise, const DiscreteSpectralMeasure& m,
                   Target target) {
  const TorusGrid& g = noise.grid;
  const TimeGrid& time = noise.time;
  g.require_same(m.grid, "cd_integral");
  z.require_shape(g, time);
  if (!z.adapted) throw std::invalid_argument("cd_integral needs an adapted integrand");
  if (target.step > time.steps || target.point >= g.size())
    throw std::out_of_range("cd_integral target outside the grid");

  const auto zeta = moll.on_grid(g);
  const Fft fft(g);
  const double t = time.node(target.step);
  const double inv_m = 1.0 / static_cast<double>(g.size());
  std::vector<cplx> acc(g.size(), cplx(0.0)), buf(g.size());
  for (std::size_t j = 0; j < target.step; ++j) {
    auto dm = realize_field_increment(noise, j, m);
    auto zj = z.row(j);
    for (std::size_t p = 0; p < g.size(); ++p) buf[p] = zj[p] * dm[p];
    fft.forward(buf);
    auto mult = kernel_multiplier(kernel, g, zeta, t - time.mid(j));
    for (std::size_t k = 0; k < g.size(); ++k) acc[k] += mult[k] * buf[k] * inv_m;
  }
  return synthesize_at(g, acc, target.point);
}

// Phi_j(y) = G_n(t_i - s_j, x - y) Z_j(y) for j < i, zero afterwards: the
// integrand whose Ito series integral is the CD integral above.
template <RadialKernel K>
AdaptedIntegrand kernel_integrand(const K& kernel, const Mollifier& moll,
                                  const AdaptedIntegrand& z, const TorusGrid& grid,
                                  const TimeGrid& time, Target target) {
  z.require_shape(grid, time);
  const auto zeta = moll.on_grid(grid);
  AdaptedIntegrand phi(time.steps, grid.size(), z.adapted);
  const double t = time.node(target.step);
  for (std::size_t j = 0; j < target.step; ++j) {
    auto lambda = kernel_lattice(kernel, grid, zeta, t - time.mid(j));
    auto zj = z.row(j);
    auto out = phi.row(j);
    for (std::size_t y = 0; y < grid.size(); ++y)
      out[y] = lambda[grid.shifted(target.point, grid.pair(y))] * zj[y];
  }
  return phi;
}

// ------------------------------------------------------ Ito series

// sum_j sum_i <Phi_j, e_i>_H dW^i_j.
inline double ito_series_integral(const AdaptedIntegrand& phi, const ConsBasis& basis,
                                  const NoiseIncrements& noise) {
  phi.require_shape(noise.grid, noise.time);
  basis.grid().require_same(noise.grid, "ito_series_integral");
  if (!phi.adapted) throw std::invalid_argument("Ito integral needs an adapted integrand");
  CompensatedSum acc;
  for (std::size_t j = 0; j < noise.time.steps; ++j) {
    auto row = phi.row(j);
    bool any = false;
    for (double v : row) any |= v != 0.0;
    if (!any) continue;
    auto coeff = basis.project(row);
    auto dw = basis.increments(noise, j);
    for (std::size_t i = 0; i < coeff.size(); ++i) acc.add(coeff[i] * dw[i]);
  }
  return acc.value();
}

// ------------------------------------------------------ Skorohod

// A random variable given as a function of the noise path, with its
// derivative paired against an H_T direction.
struct WienerFunctional {
  std::function<double(const NoiseIncrements&)> value;
  std::function<double(const NoiseIncrements&, const ShiftDirection&)> derivative;
};

inline WienerFunctional constant_functional(double c) {
  return {[c](const NoiseIncrements&) { return c; },
          [](const NoiseIncrements&, const ShiftDirection&) { return 0.0; }};
}

// X = F(h): Gaussian, with DX = h.
inline WienerFunctional noise_mass_functional(ShiftDirection h, const ConsBasis& basis) {
  return {[h, &basis](const NoiseIncrements& n) { return noise_mass(h, basis, n); },
          [h](const NoiseIncrements&, const ShiftDirection& d) { return inner_ht(h, d); }};
}

// X depends only on the increments of steps < until.  Its derivative in a
// direction vanishing on those steps is zero; otherwise it is taken by a
// central difference along the restricted shift.
inline WienerFunctional causal_functional(
    std::function<double(const NoiseIncrements&)> f, std::size_t until,
    const ConsBasis& basis, double fd_step = 1e-6) {
  auto deriv = [f, until, &basis, fd_step](const NoiseIncrements& n,
                                           const ShiftDirection& d) {
    ShiftDirection past = d;
    for (std::size_t j = std::min(until, past.steps); j < past.steps; ++j)
      std::fill(past.row(j).begin(), past.row(j).end(), 0.0);
    if (past.is_zero()) return 0.0;
    double up = f(shift_noise(n, basis, past, fd_step));
    double down = f(shift_noise(n, basis, past, -fd_step));
    return (up - down) / (2.0 * fd_step);
  };
  return {std::move(f), deriv};
}

// X 1_{(t_first, t_last]} 1_A.
struct ElementaryProcess {
  std::size_t first = 0;
  std::size_t last = 0;
  std::vector<std::size_t> cells;
  WienerFunctional x;
};

// delta(g) = X F(1_{(a,b]} 1_A) - <DX, 1_{(a,b]} 1_A>_{H_T}.
inline double skorohod_elementary(const ElementaryProcess& g, const ConsBasis& basis,
                                  const NoiseIncrements& noise) {
  if (!g.x.value) throw std::invalid_argument("elementary process without a value");
  if (!g.x.derivative)
    throw std::invalid_argument("elementary process without a derivative evaluator");
  auto window = window_direction(basis, noise.time, g.first, g.last,
                                 indicator(noise.grid, g.cells));
  const double mass = noise_mass(window, basis, noise);
  return g.x.value(noise) * mass - g.x.derivative(noise, window);
}

inline double skorohod_sum(std::span<const ElementaryProcess> parts,
                           const ConsBasis& basis, const NoiseIncrements& noise) {
  CompensatedSum acc;
  for (const auto& g : parts) acc.add(skorohod_elementary(g, basis, noise));
  return acc.value();
}

// delta of sum_{j<steps} sum_m X_{j,m} 1_{(t_j, t_{j+1}]} 1_{{z_m}} where
// X_{j,m} = value_of(j, m, path) reads only increments before step j.
inline double skorohod_lattice_sum(
    const std::function<double(std::size_t, std::size_t, const NoiseIncrements&)>& value_of,
    std::size_t steps, const ConsBasis& basis, const NoiseIncrements& noise) {
  if (steps > noise.time.steps) throw std::out_of_range("too many steps");
  CompensatedSum acc;
  for (std::size_t j = 0; j < steps; ++j) {
    for (std::size_t m = 0; m < noise.grid.size(); ++m) {
      ElementaryProcess g{
          j, j + 1, {m},
          causal_functional([&value_of, j, m](const NoiseIncrements& n) {
            return value_of(j, m, n);
          }, j, basis)};
      acc.add(skorohod_elementary(g, basis, noise));
    }
  }
  return acc.value();
}

// --------------------------------------------------------- pathwise

// sum_{j<=i} w_j [ G_n(t_i - t_j) * Z_j ](x), trapezoid weights w_j.
template <RadialKernel K>
double pathwise_integral(const K& kernel, const Mollifier& moll, const AdaptedIntegrand& z,
                         const TorusGrid& grid, const TimeGrid& time, Target target) {
  z.require_shape(grid, time);
  if (target.step > time.steps || target.point >= grid.size())
    throw std::out_of_range("pathwise_integral target outside the grid");
  const auto zeta = moll.on_grid(grid);
  const Fft fft(grid);
  const double t = time.node(target.step);
  const double inv_m = 1.0 / static_cast<double>(grid.size());
  std::vector<cplx> acc(grid.size(), cplx(0.0));
  for (std::size_t j = 0; j <= target.step; ++j) {
    const double w = pathwise_weight(time, j, target.step);
    if (w == 0.0) continue;
    auto spec = fft.forward_real(z.row(j));
    auto mult = kernel_multiplier(kernel, grid, zeta, t - time.node(j));
    for (std::size_t k = 0; k < grid.size(); ++k) acc[k] += w * mult[k] * spec[k] * inv_m;
  }
  return synthesize_at(grid, acc, target.point);
}

// --------------------------------------------------- Hilbert-valued

template <RadialKernel K>
std::vector<double> hilbert_cd_integral(const K& kernel, const Mollifier& moll,
                                        const HilbertIntegrand& z,
                                        const NoiseIncrements& noise,
                                        const DiscreteSpectralMeasure& m, Target target) {
  if (z.size() == 0) throw std::invalid_argument("Hilbert integrand has no coordinates");
  std::vector<double> out;
  out.reserve(z.size());
  for (const auto& c : z.coords) out.push_back(cd_integral(kernel, moll, c, noise, m, target));
  return out;
}

template <RadialKernel K>
std::vector<double> hilbert_pathwise_integral(const K& kernel, const Mollifier& moll,
                                              const HilbertIntegrand& z,
                                              const TorusGrid& grid, const TimeGrid& time,
                                              Target target) {
  if (z.size() == 0) throw std::invalid_argument("Hilbert integrand has no coordinates");
  std::vector<double> out;
  out.reserve(z.size());
  for (const auto& c : z.coords)
    out.push_back(pathwise_integral(kernel, moll, c, grid, time, target));
  return out;
}

inline double squared_norm(std::span<const double> v) {
  CompensatedSum acc;
  for (double x : v) acc.add(x * x);
  return acc.value();
}

}  // namespace swave
