#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "swave/core/error.hpp"
#include "swave/integrals/integrals.hpp"
#include "swave/solver/solver.hpp"

namespace swave {

// Kernel multipliers by lag index: mid(l) at (l - 1/2) dt for the noise
// term, node(l) at l dt for the drift.
class LagTables {
 public:
  template <RadialKernel K>
  LagTables(const K& kernel, const TorusGrid& grid, const TimeGrid& time,
            const Mollifier& moll)
      : modes_(grid.size()), mid_((time.steps + 1) * grid.size(), 0.0),
        node_((time.steps + 1) * grid.size(), 0.0) {
    const auto zeta = moll.on_grid(grid);
    for (std::size_t l = 0; l <= time.steps; ++l)
      for (std::size_t k = 0; k < modes_; ++k) {
        if (zeta[k] == 0.0) continue;
        const double r = grid.radius(k);
        if (l > 0) mid_[l * modes_ + k] = kernel.ft((l - 0.5) * time.dt, r) * zeta[k];
        node_[l * modes_ + k] = kernel.ft(l * time.dt, r) * zeta[k];
      }
  }

  const double* mid(std::size_t lag) const { return mid_.data() + lag * modes_; }
  const double* node(std::size_t lag) const { return node_.data() + lag * modes_; }

 private:
  std::size_t modes_;
  std::vector<double> mid_, node_;
};

// D^h u(t_j, z_m) for j = 0..steps.
struct DirectionalDerivative {
  TorusGrid grid;
  TimeGrid time;
  std::vector<double> values;

  std::span<const double> row(std::size_t j) const {
    if (j > time.steps) throw std::out_of_range("derivative row out of range");
    return {values.data() + j * grid.size(), grid.size()};
  }
  double at(std::size_t j, std::size_t m) const { return row(j)[m]; }
};

// Du(t, x) as an H_T element: coefficient (j, i) pairs with e_i on step j.
struct MalliavinField {
  Target target;
  ShiftDirection field;

  double norm_sq() const { return field.norm_sq(); }
  double pair(const ShiftDirection& h) const { return inner_ht(field, h); }
  double coefficient(std::size_t step, std::size_t element) const {
    return field.at(step, element);
  }
};

namespace detail {

inline void check_solution(const SolverConfig& cfg, const NoiseIncrements& noise,
                           const SolutionField& u) {
  check_inputs(cfg, noise);
  cfg.grid().require_same(u.grid, "derivative solution");
  if (u.time.steps != cfg.time.steps || u.time.dt != cfg.time.dt)
    throw GridMismatch("solution time grid does not match the derivative solve");
}

}  // namespace detail

// Forward tangent along h:
//   D_i = sum_{j<i} G(t_i - s_j) * (sigma(u_j) dt R h_j + sigma'(u_j) D_j dM_j)
//       + sum_{j<i} w_j G(t_i - t_j) * (b'(u_j) D_j).
template <RadialKernel K = WaveKernel>
DirectionalDerivative solve_derivative_directional(const SolverConfig& cfg,
                                                   const Coefficients& co,
                                                   const NoiseIncrements& noise,
                                                   const SolutionField& u,
                                                   const ConsBasis& basis,
                                                   const ShiftDirection& h,
                                                   const K& kernel = {}) {
  detail::check_solution(cfg, noise, u);
  basis.grid().require_same(cfg.grid(), "derivative basis");
  if (h.steps != cfg.time.steps || h.basis_size != basis.size() || h.dt != cfg.time.dt)
    throw GridMismatch("direction does not match the derivative discretization");
  const TorusGrid& g = cfg.grid();
  const TimeGrid& time = cfg.time;
  const std::size_t M = g.size();
  const std::size_t n = time.steps;
  const LagTables lags(kernel, g, time, cfg.mollifier);
  const Fft fft(g);
  const auto dm = realize_all_increments(noise, cfg.measure);
  const bool feedback_noise = !co.sigma.is_constant();
  const bool feedback_drift = !co.drift.is_constant();

  // Spectra of the noise-node sources and drift-node sources per step.
  std::vector<cplx> noise_src(n * M, cplx(0.0)), drift_src(n * M, cplx(0.0));
  std::vector<bool> active(n, false);
  std::vector<double> d((n + 1) * M, 0.0);
  std::vector<cplx> buf(M);
  for (std::size_t i = 0; i <= n; ++i) {
    if (i > 0) {
      std::fill(buf.begin(), buf.end(), cplx(0.0));
      for (std::size_t j = 0; j < i; ++j) {
        if (!active[j]) continue;
        const double* tm = lags.mid(i - j);
        const double* tn = lags.node(i - j);
        const cplx* ns = noise_src.data() + j * M;
        const cplx* ds = drift_src.data() + j * M;
        for (std::size_t k = 0; k < M; ++k) buf[k] += tm[k] * ns[k] + tn[k] * ds[k];
      }
      fft.inverse_to_real(buf, {d.data() + i * M, M});
    }
    if (i == n) break;
    auto ui = u.row(i);
    const double* di = d.data() + i * M;
    bool any_h = false;
    for (double c : h.row(i)) any_h |= c != 0.0;
    std::vector<double> src(M, 0.0);
    if (any_h) {
      auto rep = basis.field_from_coefficients(h.row(i));
      for (std::size_t m = 0; m < M; ++m) src[m] = co.sigma(ui[m]) * time.dt * rep[m];
    }
    if (feedback_noise)
      for (std::size_t m = 0; m < M; ++m)
        src[m] += co.sigma.derivative(ui[m]) * di[m] * dm[i * M + m];
    bool any_src = false;
    for (double v : src) any_src |= v != 0.0;
    if (any_src) {
      std::span<cplx> out{noise_src.data() + i * M, M};
      fft.forward_real(src, out);
      active[i] = true;
    }
    if (feedback_drift) {
      for (std::size_t m = 0; m < M; ++m)
        src[m] = time.drift_weight(i) * co.drift.derivative(ui[m]) * di[m];
      std::span<cplx> out{drift_src.data() + i * M, M};
      fft.forward_real(src, out);
      active[i] = true;
    }
  }
  return {g, time, std::move(d)};
}

// Lattice fields q_j with D^h u(t, x) = sum_j dt <q_j, R h_j>: the
// backward (adjoint) sweep of the derivative recursion.  `first` keeps only
// the explicit term, without the sigma' and b' feedback.
struct AdjointSweep {
  std::vector<double> full;   // q_j, step-major, steps * M
  std::vector<double> first;  // first-term part of q_j
};

template <RadialKernel K = WaveKernel>
AdjointSweep adjoint_sweep(const SolverConfig& cfg, const Coefficients& co,
                           const NoiseIncrements& noise, const SolutionField& u,
                           Target target, const K& kernel = {}) {
  detail::check_solution(cfg, noise, u);
  const TorusGrid& g = cfg.grid();
  const TimeGrid& time = cfg.time;
  const std::size_t M = g.size();
  const std::size_t n = target.step;
  if (n > time.steps || target.point >= g.size())
    throw std::out_of_range("derivative target outside the grid");
  const LagTables lags(kernel, g, time, cfg.mollifier);
  const Fft fft(g);
  const bool feedback_noise = !co.sigma.is_constant();
  const bool feedback_drift = !co.drift.is_constant();
  std::vector<double> dm;
  if (feedback_noise) dm = realize_all_increments(noise, cfg.measure);

  // Spectra of p_i for i in (j, n].
  std::vector<cplx> pspec((n + 1) * M, cplx(0.0));
  std::vector<bool> live(n + 1, false);
  {
    std::vector<double> delta(M, 0.0);
    delta[target.point] = 1.0;
    fft.forward_real(delta, {pspec.data() + n * M, M});
    live[n] = true;
  }
  AdjointSweep out{std::vector<double>(time.steps * M, 0.0),
                   std::vector<double>(time.steps * M, 0.0)};
  std::vector<cplx> rs(M), rn(M), tmp(M);
  std::vector<double> r(M), rfull(M), rnode(M), p(M);
  for (std::size_t j = n; j-- > 0;) {
    std::fill(rs.begin(), rs.end(), cplx(0.0));
    std::fill(rn.begin(), rn.end(), cplx(0.0));
    for (std::size_t i = j + 1; i <= n; ++i) {
      if (!live[i]) continue;
      const double* tm = lags.mid(i - j);
      const double* tn = lags.node(i - j);
      const cplx* ps = pspec.data() + i * M;
      for (std::size_t k = 0; k < M; ++k) {
        rs[k] += tm[k] * ps[k];
        if (feedback_drift) rn[k] += tn[k] * ps[k];
      }
    }
    fft.inverse_to_real(rs, rfull);
    auto uj = u.row(j);
    double* qj = out.full.data() + j * M;
    for (std::size_t m = 0; m < M; ++m) qj[m] = co.sigma(uj[m]) * rfull[m];

    // First term: only p_n contributes.
    const double* tm = lags.mid(n - j);
    const cplx* pn = pspec.data() + n * M;
    for (std::size_t k = 0; k < M; ++k) tmp[k] = tm[k] * pn[k];
    fft.inverse_to_real(tmp, r);
    double* q0 = out.first.data() + j * M;
    for (std::size_t m = 0; m < M; ++m) q0[m] = co.sigma(uj[m]) * r[m];

    if (!feedback_noise && !feedback_drift) continue;
    std::fill(p.begin(), p.end(), 0.0);
    if (feedback_noise)
      for (std::size_t m = 0; m < M; ++m)
        p[m] += co.sigma.derivative(uj[m]) * dm[j * M + m] * rfull[m];
    if (feedback_drift) {
      fft.inverse_to_real(rn, rnode);
      for (std::size_t m = 0; m < M; ++m)
        p[m] += time.drift_weight(j) * co.drift.derivative(uj[m]) * rnode[m];
    }
    fft.forward_real(p, {pspec.data() + j * M, M});
    live[j] = true;
  }
  return out;
}

inline constexpr std::size_t kMalliavinBudget = std::size_t{1} << 28;  // doubles

// Coefficients of q_j in the dual of the field map: <q, R e_i> for every i.
inline ShiftDirection dual_field(const ConsBasis& basis, const TimeGrid& time,
                                 std::span<const double> q) {
  const std::size_t M = basis.grid().size();
  if (q.size() != time.steps * M) throw GridMismatch("adjoint field size mismatch");
  ShiftDirection out(time.steps, basis.size(), time.dt);
  const Fft fft(basis.grid());
  std::vector<cplx> spec(M);
  for (std::size_t j = 0; j < time.steps; ++j) {
    auto row = q.subspan(j * M, M);
    bool any = false;
    for (double v : row) any |= v != 0.0;
    if (!any) continue;
    fft.forward_real(row, spec);
    auto c = basis.project_spectrum(spec);
    std::copy(c.begin(), c.end(), out.row(j).begin());
  }
  return out;
}

inline void require_capacity(const ConsBasis& basis, const TimeGrid& time) {
  if (basis.size() * time.steps > kMalliavinBudget)
    throw CapacityError("Malliavin field of " + std::to_string(basis.size()) + " x " +
                        std::to_string(time.steps) + " coefficients exceeds the budget");
}

template <RadialKernel K = WaveKernel>
MalliavinField solve_derivative_full(const SolverConfig& cfg, const Coefficients& co,
                                     const NoiseIncrements& noise, const SolutionField& u,
                                     const ConsBasis& basis, Target target,
                                     const K& kernel = {}) {
  require_capacity(basis, cfg.time);
  basis.grid().require_same(cfg.grid(), "derivative basis");
  auto sweep = adjoint_sweep(cfg, co, noise, u, target, kernel);
  return {target, dual_field(basis, cfg.time, sweep.full)};
}

template <RadialKernel K = WaveKernel>
MalliavinField solve_derivative_mollified(const SolverConfig& cfg, const Coefficients& co,
                                          const NoiseIncrements& noise,
                                          const SolutionField& u_n, const Mollifier& moll,
                                          const ConsBasis& basis, Target target,
                                          const K& kernel = {}) {
  SolverConfig c = cfg;
  c.mollifier = moll;
  return solve_derivative_full(c, co, noise, u_n, basis, target, kernel);
}

// D(B(u(t, x))) = B'(u(t, x)) Du(t, x).
inline MalliavinField chain_rule(const MalliavinField& du, const Coefficient& transform,
                                 double value) {
  return {du.target, du.field.scaled(transform.derivative(value))};
}

// Full field by one forward tangent per (step, element) direction; the
// reference for the adjoint sweep on small grids.
template <RadialKernel K = WaveKernel>
MalliavinField derivative_by_directions(const SolverConfig& cfg, const Coefficients& co,
                                        const NoiseIncrements& noise, const SolutionField& u,
                                        const ConsBasis& basis, Target target,
                                        const K& kernel = {}) {
  require_capacity(basis, cfg.time);
  ShiftDirection out(cfg.time.steps, basis.size(), cfg.time.dt);
  for (std::size_t j = 0; j < target.step; ++j)
    for (std::size_t i = 0; i < basis.size(); ++i) {
      ShiftDirection h(cfg.time.steps, basis.size(), cfg.time.dt);
      h.at(j, i) = 1.0;
      auto d = solve_derivative_directional(cfg, co, noise, u, basis, h, kernel);
      out.at(j, i) = d.at(target.step, target.point) / cfg.time.dt;
    }
  return {target, std::move(out)};
}

}  // namespace swave
