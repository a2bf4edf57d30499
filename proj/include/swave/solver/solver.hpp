#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/binary_io.hpp"
#include "swave/integrals/adapted.hpp"
#include "swave/integrals/kernel_window.hpp"
#include "swave/noise/shift.hpp"
#include "swave/solver/coefficients.hpp"

namespace swave {

enum class Scheme { direct, picard };

struct SolverConfig {
  DiscreteSpectralMeasure measure;
  TimeGrid time;
  Mollifier mollifier;
  Scheme scheme = Scheme::direct;
  std::size_t picard_depth = 1;
  // Drive every term of the shifted equation with u^h instead of only the
  // h-term.
  bool shifted_all_terms = false;
  double divergence_threshold = 1e12;
  // Keep the full convolution history even for the wave kernel.
  bool force_direct_history = false;

  const TorusGrid& grid() const noexcept { return measure.grid; }

  void validate() const {
    if (time.steps == 0 || !(time.dt > 0.0))
      throw std::invalid_argument("solver needs at least one step and dt > 0");
    if (scheme == Scheme::picard && picard_depth < 1)
      throw std::invalid_argument("picard depth must be >= 1");
    if (!(divergence_threshold > 0.0))
      throw std::invalid_argument("divergence threshold must be > 0");
  }
};

inline SolverConfig make_solver_config(const DiscreteSpectralMeasure& m, const TimeGrid& time,
                                       const Mollifier& moll = Mollifier::identity()) {
  SolverConfig cfg;
  cfg.measure = m;
  cfg.time = time;
  cfg.mollifier = moll;
  return cfg;
}

// u(t_j, z_m) for j = 0..steps.
struct SolutionField {
  TorusGrid grid;
  TimeGrid time;
  std::vector<double> values;
  std::string digest;
  NoiseKey key;

  std::span<const double> row(std::size_t j) const {
    if (j > time.steps) throw std::out_of_range("solution row out of range");
    return {values.data() + j * grid.size(), grid.size()};
  }
  std::span<double> row(std::size_t j) {
    if (j > time.steps) throw std::out_of_range("solution row out of range");
    return {values.data() + j * grid.size(), grid.size()};
  }
  double at(std::size_t j, std::size_t m) const { return row(j)[m]; }
};

namespace detail {

inline void guard(std::span<const double> u, std::size_t step, double threshold) {
  double worst = 0.0;
  for (double v : u) {
    if (!std::isfinite(v)) throw SolverDivergence(step, v);
    worst = std::max(worst, std::abs(v));
  }
  if (worst > threshold) throw SolverDivergence(step, worst);
}

template <RadialKernel K>
void require_causal_kernel(const K& kernel, const TorusGrid& grid) {
  for (double r : grid.radii())
    if (kernel.ft(0.0, r) != 0.0)
      throw std::invalid_argument("solver needs a kernel that vanishes at zero lag");
}

// One pass of the explicit recursion
//   u_i = sum_{j<i} G(t_i - s_j) * (sigma(v_j) dm_j) + sum_{j<i} w_j G(t_i - t_j) * b(v_j)
// where v = source (Picard) or v = u itself (source == nullptr).
template <RadialKernel K>
std::vector<double> recursion(const SolverConfig& cfg, const K& kernel, const Coefficients& co,
                              std::span<const double> dm, const std::vector<double>* source) {
  const TorusGrid& g = cfg.grid();
  const TimeGrid& time = cfg.time;
  const std::size_t M = g.size();
  const auto zeta = cfg.mollifier.on_grid(g);
  const Fft fft(g);
  SpectralHistory<K> noise_part(kernel, g, zeta, cfg.force_direct_history);
  SpectralHistory<K> drift_part(kernel, g, zeta, cfg.force_direct_history);
  const bool has_noise = !co.sigma.is_zero();
  const bool has_drift = !co.drift.is_zero();

  std::vector<double> u((time.steps + 1) * M, 0.0);
  std::vector<cplx> spec(M), part(M);
  for (std::size_t i = 0; i <= time.steps; ++i) {
    double* ui = u.data() + i * M;
    if (i > 0) {
      noise_part.evaluate(time.node(i), spec);
      if (has_drift) {
        drift_part.evaluate(time.node(i), part);
        for (std::size_t k = 0; k < M; ++k) spec[k] += part[k];
      }
      fft.inverse_to_real(spec, {ui, M});
      guard({ui, M}, i, cfg.divergence_threshold);
    }
    if (i == time.steps) break;
    const double* vi = source ? source->data() + i * M : ui;
    if (has_noise) {
      const double* dmi = dm.data() + i * M;
      for (std::size_t m = 0; m < M; ++m) spec[m] = co.sigma(vi[m]) * dmi[m];
      fft.forward(spec);
      noise_part.push(time.mid(i), spec);
    }
    if (has_drift) {
      for (std::size_t m = 0; m < M; ++m) spec[m] = co.drift(vi[m]);
      fft.forward(spec);
      drift_part.push(time.node(i), spec, time.drift_weight(i));
    }
  }
  return u;
}

template <RadialKernel K>
std::vector<double> solve_values(const SolverConfig& cfg, const K& kernel,
                                 const Coefficients& co, std::span<const double> dm) {
  if (cfg.scheme == Scheme::direct) return recursion(cfg, kernel, co, dm, nullptr);
  std::vector<double> iterate((cfg.time.steps + 1) * cfg.grid().size(), 0.0);
  for (std::size_t p = 0; p < cfg.picard_depth; ++p)
    iterate = recursion(cfg, kernel, co, dm, &iterate);
  return iterate;
}

inline void check_inputs(const SolverConfig& cfg, const NoiseIncrements& noise) {
  cfg.validate();
  cfg.grid().require_same(noise.grid, "solver noise");
  if (noise.time.steps != cfg.time.steps || noise.time.dt != cfg.time.dt)
    throw GridMismatch("noise time grid does not match the solver");
}

}  // namespace detail

template <RadialKernel K = WaveKernel>
SolutionField solve_mild(const SolverConfig& cfg, const Coefficients& co,
                         const NoiseIncrements& noise, const K& kernel = {}) {
  detail::check_inputs(cfg, noise);
  detail::require_causal_kernel(kernel, cfg.grid());
  auto dm = realize_all_increments(noise, cfg.measure);
  return {cfg.grid(), cfg.time, detail::solve_values(cfg, kernel, co, dm), {}, noise.key};
}

template <RadialKernel K = WaveKernel>
SolutionField solve_mollified(const SolverConfig& cfg, const Coefficients& co,
                              const NoiseIncrements& noise, const Mollifier& moll,
                              const K& kernel = {}) {
  SolverConfig c = cfg;
  c.mollifier = moll;
  return solve_mild(c, co, noise, kernel);
}

// Shifted equation: the h-term sum_j dt <G(t - s_j, x - *) sigma(u^h_j), h_j>_H
// is the convolution of sigma(u^h_j) with the Riesz representer of h_j.
// Verbatim form: noise and drift integrals keep u; all-terms form: every
// term uses u^h.
template <RadialKernel K = WaveKernel>
SolutionField solve_shifted(const SolverConfig& cfg, const Coefficients& co,
                            const NoiseIncrements& noise, const ConsBasis& basis,
                            const ShiftDirection& h, const K& kernel = {}) {
  detail::check_inputs(cfg, noise);
  detail::require_causal_kernel(kernel, cfg.grid());
  basis.grid().require_same(cfg.grid(), "shift basis");
  if (h.steps != cfg.time.steps || h.basis_size != basis.size() || h.dt != cfg.time.dt)
    throw GridMismatch("shift direction does not match the solver discretization");

  const TorusGrid& g = cfg.grid();
  const std::size_t M = g.size();
  const TimeGrid& time = cfg.time;
  auto dm = realize_all_increments(noise, cfg.measure);
  std::vector<double> drive(time.steps * M, 0.0);
  for (std::size_t j = 0; j < time.steps; ++j) {
    bool any = false;
    for (double c : h.row(j)) any |= c != 0.0;
    if (!any) continue;
    auto rep = basis.field_from_coefficients(h.row(j));
    for (std::size_t m = 0; m < M; ++m) drive[j * M + m] = time.dt * rep[m];
  }

  if (cfg.shifted_all_terms) {
    for (std::size_t n = 0; n < dm.size(); ++n) dm[n] += drive[n];
    return {g, time, detail::solve_values(cfg, kernel, co, dm), {}, noise.key};
  }

  auto u = detail::solve_values(cfg, kernel, co, dm);
  const auto zeta = cfg.mollifier.on_grid(g);
  const Fft fft(g);
  SpectralHistory<K> shift_part(kernel, g, zeta, cfg.force_direct_history);
  std::vector<double> uh((time.steps + 1) * M, 0.0);
  std::vector<double> add(M);
  std::vector<cplx> spec(M);
  for (std::size_t i = 0; i <= time.steps; ++i) {
    double* out = uh.data() + i * M;
    const double* base = u.data() + i * M;
    if (i > 0) {
      shift_part.evaluate(time.node(i), spec);
      fft.inverse_to_real(spec, add);
      for (std::size_t m = 0; m < M; ++m) out[m] = base[m] + add[m];
      detail::guard({out, M}, i, cfg.divergence_threshold);
    } else {
      std::copy(base, base + M, out);
    }
    if (i == time.steps) break;
    for (std::size_t m = 0; m < M; ++m) spec[m] = co.sigma(out[m]) * drive[i * M + m];
    fft.forward(spec);
    shift_part.push(time.mid(i), spec);
  }
  return {g, time, std::move(uh), {}, noise.key};
}

// Causal evaluator of f(u(t_j, .)).  Row j re-solves on the increments
// before step j with the later ones zeroed, which leaves u_j unchanged.
template <RadialKernel K = WaveKernel>
CausalEvaluator solution_evaluator(const SolverConfig& cfg, const Coefficients& co,
                                   Coefficient f, const K& kernel = {}) {
  return [cfg, co, f, kernel](std::size_t j, const PastNoise& past) {
    const std::size_t M = past.grid().size();
    NoiseIncrements n{past.grid(), past.time(), {},
                      std::vector<cplx>(past.time().steps * M, cplx(0.0))};
    for (std::size_t i = 0; i < j; ++i) {
      auto s = past.increments(i);
      std::copy(s.begin(), s.end(), n.step(i).begin());
    }
    std::vector<double> out(M);
    if (j == 0) {
      for (double& v : out) v = f(0.0);
      return out;
    }
    auto u = solve_mild(cfg, co, n, kernel);
    auto row = u.row(j);
    for (std::size_t m = 0; m < M; ++m) out[m] = f(row[m]);
    return out;
  };
}

// ------------------------------------------------------------ persistence

inline void write_field(const std::string& path, const SolutionField& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  binary::put_magic(out, "SWFIELD1");
  binary::put_u64(out, static_cast<std::uint64_t>(u.grid.dim()));
  binary::put_f64(out, u.grid.period());
  binary::put_u64(out, static_cast<std::uint64_t>(u.grid.cutoff()));
  binary::put_u64(out, u.time.steps);
  binary::put_f64(out, u.time.dt);
  binary::put_u64(out, u.key.seed);
  binary::put_u64(out, u.key.replica);
  binary::put_u64(out, u.digest.size());
  out.write(u.digest.data(), static_cast<std::streamsize>(u.digest.size()));
  for (double v : u.values) binary::put_f64(out, v);
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline SolutionField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  binary::expect_magic(in, "SWFIELD1");
  SolutionField u;
  int d = static_cast<int>(binary::get_u64(in));
  double L = binary::get_f64(in);
  int K = static_cast<int>(binary::get_u64(in));
  u.grid = TorusGrid(d, L, K);
  u.time.steps = binary::get_u64(in);
  u.time.dt = binary::get_f64(in);
  u.key.seed = binary::get_u64(in);
  u.key.replica = binary::get_u64(in);
  std::uint64_t n = binary::get_u64(in);
  if (n > 4096) throw std::runtime_error("corrupt field header in " + path);
  u.digest.resize(n);
  in.read(u.digest.data(), static_cast<std::streamsize>(n));
  u.values.resize((u.time.steps + 1) * u.grid.size());
  for (double& v : u.values) v = binary::get_f64(in);
  if (!in) throw std::runtime_error("truncated field file " + path);
  return u;
}

}  // namespace swave
