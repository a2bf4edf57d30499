#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/binary_io.hpp"
#include "swave/core/fft.hpp"
#include "swave/core/grid.hpp"
#include "swave/core/philox.hpp"
#include "swave/noise/discrete_measure.hpp"

namespace swave {

// Identifies one noise path: generator seed and replica (stream) id.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

// Complex Brownian increments per (time step, mode), step-major.
struct NoiseIncrements {
  TorusGrid grid;
  TimeGrid time;
  NoiseKey key;
  std::vector<cplx> beta;

  std::span<const cplx> step(std::size_t j) const {
    if (j >= time.steps) throw std::out_of_range("noise step out of range");
    return {beta.data() + j * grid.size(), grid.size()};
  }
  std::span<cplx> step(std::size_t j) {
    if (j >= time.steps) throw std::out_of_range("noise step out of range");
    return {beta.data() + j * grid.size(), grid.size()};
  }
};

inline NoiseIncrements sample_increments(const DiscreteSpectralMeasure& measure,
                                         const TimeGrid& time, NoiseKey key) {
  const TorusGrid& g = measure.grid;
  constexpr std::uint64_t kWord = std::numeric_limits<std::uint32_t>::max();
  if (key.replica > kWord)
    throw std::invalid_argument("replica id must fit in 32 bits");
  if (time.steps > kWord || g.size() > kWord)
    throw std::invalid_argument("step or mode count exceeds the RNG counter");
  if (!(time.dt > 0.0) || time.steps == 0)
    throw std::invalid_argument("noise needs dt > 0 and at least one step");

  NoiseIncrements out{g, time, key, std::vector<cplx>(time.steps * g.size())};
  const auto rng_key = philox_key(key.seed);
  const double paired_sd = std::sqrt(0.5 * time.dt);
  const double origin_sd = std::sqrt(time.dt);
  const auto replica = static_cast<std::uint32_t>(key.replica);
  for (std::size_t j = 0; j < time.steps; ++j) {
    cplx* row = out.beta.data() + j * g.size();
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.is_canonical(k) || measure.weights[k] <= 0.0) continue;
      auto [a, b] = philox_normal_pair(
          {replica, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k),
           0u},
          rng_key);
      std::size_t neg = g.pair(k);
      if (neg == k) {
        row[k] = cplx(origin_sd * a, 0.0);
      } else {
        row[k] = cplx(paired_sd * a, paired_sd * b);
        row[neg] = std::conj(row[k]);
      }
    }
  }
  return out;
}

// Scaled spectrum sqrt(w_k) * dbeta_k of one step.
inline std::vector<cplx> increment_spectrum(const NoiseIncrements& incr,
                                            std::size_t j,
                                            const DiscreteSpectralMeasure& m) {
  incr.grid.require_same(m.grid, "increment spectrum");
  auto row = incr.step(j);
  std::vector<cplx> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k)
    out[k] = std::sqrt(m.weights[k]) * row[k];
  return out;
}

// Delta M_j(z_m) = sum_k sqrt(w_k) exp(2 pi i xi_k.z_m) dbeta_k.  The
// imaginary residue of the synthesis is returned through `residue` when
// requested.
inline std::vector<double> realize_field_increment(
    const NoiseIncrements& incr, std::size_t j,
    const DiscreteSpectralMeasure& m, double* residue = nullptr) {
  if (j >= incr.time.steps) throw std::out_of_range("noise step out of range");
  auto spec = increment_spectrum(incr, j, m);
  Fft(incr.grid).backward(spec);
  std::vector<double> out(spec.size());
  double imag = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out[i] = spec[i].real();
    imag = std::max(imag, std::abs(spec[i].imag()));
  }
  if (residue) *residue = imag;
  return out;
}

// All steps, step-major.
inline std::vector<double> realize_all_increments(
    const NoiseIncrements& incr, const DiscreteSpectralMeasure& m) {
  const std::size_t M = incr.grid.size();
  std::vector<double> out(incr.time.steps * M);
  Fft fft(incr.grid);
  std::vector<cplx> spec(M);
  for (std::size_t j = 0; j < incr.time.steps; ++j) {
    auto row = incr.step(j);
    for (std::size_t k = 0; k < M; ++k) spec[k] = std::sqrt(m.weights[k]) * row[k];
    fft.backward(spec);
    for (std::size_t i = 0; i < M; ++i) out[j * M + i] = spec[i].real();
  }
  return out;
}

// ------------------------------------------------------------ persistence

inline void write_increments(const std::string& path, const NoiseIncrements& n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  binary::put_magic(out, "SWNOISE1");
  binary::put_u64(out, static_cast<std::uint64_t>(n.grid.dim()));
  binary::put_f64(out, n.grid.period());
  binary::put_u64(out, static_cast<std::uint64_t>(n.grid.cutoff()));
  binary::put_u64(out, n.time.steps);
  binary::put_f64(out, n.time.dt);
  binary::put_u64(out, n.key.seed);
  binary::put_u64(out, n.key.replica);
  for (const cplx& v : n.beta) {
    binary::put_f64(out, v.real());
    binary::put_f64(out, v.imag());
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline NoiseIncrements read_increments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  binary::expect_magic(in, "SWNOISE1");
  int d = static_cast<int>(binary::get_u64(in));
  double L = binary::get_f64(in);
  int K = static_cast<int>(binary::get_u64(in));
  std::size_t steps = binary::get_u64(in);
  double dt = binary::get_f64(in);
  NoiseIncrements n;
  n.grid = TorusGrid(d, L, K);
  n.time.steps = steps;
  n.time.dt = dt;
  n.key.seed = binary::get_u64(in);
  n.key.replica = binary::get_u64(in);
  n.beta.resize(steps * n.grid.size());
  for (auto& v : n.beta) {
    double re = binary::get_f64(in);
    double im = binary::get_f64(in);
    v = cplx(re, im);
  }
  return n;
}

}  // namespace swave
