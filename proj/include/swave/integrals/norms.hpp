#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/core/stats.hpp"
#include "swave/integrals/integrals.hpp"
#include "swave/kernels/conditions.hpp"

namespace swave {

// c_p = sum_q a_q b_{p-q} over the mode lattice (indices mod 2K+1).
inline std::vector<double> circular_convolve(const TorusGrid& grid,
                                             std::span<const double> a,
                                             std::span<const double> b) {
  const Fft fft(grid);
  auto fa = fft.forward_real(a);
  auto fb = fft.forward_real(b);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> out(grid.size());
  fft.inverse_to_real(fa, out);
  return out;
}

// |FFT Z|^2 / M^2: the spectral weights of one lattice field, with
// Z(z) = sum_q Zhat_q exp(2 pi i xi_q . z) and nu_q = |Zhat_q|^2.
inline std::vector<double> periodogram(const Fft& fft, std::span<const double> z) {
  auto spec = fft.forward_real(z);
  const double inv = 1.0 / static_cast<double>(z.size());
  std::vector<double> out(z.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(spec[k] * inv);
  return out;
}

// Spectral weights nu_j of an integrand, one row per time node.
struct IntegrandSpectrum {
  std::size_t steps = 0;
  std::size_t modes = 0;
  std::vector<double> weights;

  IntegrandSpectrum() = default;
  IntegrandSpectrum(std::size_t n_steps, std::size_t n_modes)
      : steps(n_steps), modes(n_modes), weights((n_steps + 1) * n_modes, 0.0) {}

  std::span<const double> row(std::size_t j) const {
    return {weights.data() + j * modes, modes};
  }
  std::span<double> row(std::size_t j) { return {weights.data() + j * modes, modes}; }

  // Z == c: nu = c^2 at the origin only.
  static IntegrandSpectrum constant(const TorusGrid& grid, const TimeGrid& time,
                                    double c) {
    IntegrandSpectrum s(time.steps, grid.size());
    for (std::size_t j = 0; j <= time.steps; ++j) s.row(j)[0] = c * c;
    return s;
  }

  static IntegrandSpectrum of_path(const AdaptedIntegrand& z, const TorusGrid& grid) {
    IntegrandSpectrum s(z.steps, grid.size());
    const Fft fft(grid);
    for (std::size_t j = 0; j <= z.steps; ++j) {
      auto p = periodogram(fft, z.row(j));
      std::copy(p.begin(), p.end(), s.row(j).begin());
    }
    return s;
  }
};

// Replica average of periodograms.  This is the DFT of the circular
// empirical autocovariance, so the weights are never negative and no
// clipping is needed (clipped_mass stays 0).
class SpectrumAccumulator {
 public:
  SpectrumAccumulator() = default;
  SpectrumAccumulator(std::size_t steps, std::size_t modes)
      : steps_(steps), modes_(modes), sums_((steps + 1) * modes) {}

  void add(const IntegrandSpectrum& s) {
    if (s.steps != steps_ || s.modes != modes_)
      throw GridMismatch("spectrum shape mismatch");
    for (std::size_t n = 0; n < sums_.size(); ++n) sums_[n].add(s.weights[n]);
    ++count_;
  }

  void merge(const SpectrumAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0 && sums_.empty()) {
      *this = o;
      return;
    }
    for (std::size_t n = 0; n < sums_.size(); ++n) sums_[n].merge(o.sums_[n]);
    count_ += o.count_;
  }

  std::size_t count() const noexcept { return count_; }
  double clipped_mass() const noexcept { return 0.0; }

  IntegrandSpectrum mean() const {
    if (count_ == 0) throw std::runtime_error("spectrum estimate from zero replicas");
    IntegrandSpectrum s(steps_, modes_);
    for (std::size_t n = 0; n < sums_.size(); ++n)
      s.weights[n] = sums_[n].value() / static_cast<double>(count_);
    return s;
  }

 private:
  std::size_t steps_ = 0, modes_ = 0, count_ = 0;
  std::vector<CompensatedSum> sums_;
};

// Kernel-side tables for one target time: for every step j < i the
// stochastic lag table a_j = |FG(t - s_j) m|^2 (*) w, and for every node
// j <= i the pathwise table |FG(t - t_j) m|^2, where m is an arbitrary
// multiplier (the mollifier, or a difference of two mollifiers).
class NormTables {
 public:
  template <RadialKernel K>
  NormTables(const K& kernel, std::span<const double> multiplier,
             const DiscreteSpectralMeasure& measure, const TimeGrid& time,
             std::size_t target_step)
      : grid_(measure.grid), time_(time), step_(target_step) {
    const TorusGrid& g = measure.grid;
    if (multiplier.size() != g.size()) throw GridMismatch("multiplier length mismatch");
    if (target_step > time.steps) throw std::out_of_range("target step out of range");
    const double t = time.node(target_step);
    std::vector<double> sq(g.size());
    for (std::size_t j = 0; j < target_step; ++j) {
      auto mult = kernel_multiplier(kernel, g, multiplier, t - time.mid(j));
      for (std::size_t k = 0; k < g.size(); ++k) sq[k] = mult[k] * mult[k];
      stochastic_.push_back(circular_convolve(g, sq, measure.weights));
      for (double& v : stochastic_.back()) v = std::max(v, 0.0);
    }
    for (std::size_t j = 0; j <= target_step; ++j) {
      auto mult = kernel_multiplier(kernel, g, multiplier, t - time.node(j));
      for (double& v : mult) v *= v;
      pathwise_.push_back(std::move(mult));
    }
  }

  std::size_t target_step() const noexcept { return step_; }

  // sum_{j<i} dt sum_q nu_{j,q} a_{j,q}.
  double norm0(const IntegrandSpectrum& nu) const {
    check(nu);
    CompensatedSum acc;
    for (std::size_t j = 0; j < step_; ++j) {
      auto row = nu.row(j);
      for (std::size_t q = 0; q < row.size(); ++q)
        if (row[q] != 0.0) acc.add(time_.dt * row[q] * stochastic_[j][q]);
    }
    return acc.value();
  }

  // sum_{j<=i} w_j sum_k |FG(t - t_j)_k m_k|^2 nu_{j,k}.
  double norm1(const IntegrandSpectrum& nu) const {
    check(nu);
    CompensatedSum acc;
    for (std::size_t j = 0; j <= step_; ++j) {
      const double w = pathwise_weight(time_, j, step_);
      if (w == 0.0) continue;
      auto row = nu.row(j);
      for (std::size_t k = 0; k < row.size(); ++k)
        if (row[k] != 0.0) acc.add(w * row[k] * pathwise_[j][k]);
    }
    return acc.value();
  }

 private:
  void check(const IntegrandSpectrum& nu) const {
    if (nu.modes != grid_.size() || nu.steps != time_.steps)
      throw GridMismatch("spectrum does not match the norm tables");
  }
  TorusGrid grid_;
  TimeGrid time_;
  std::size_t step_;
  std::vector<std::vector<double>> stochastic_;
  std::vector<std::vector<double>> pathwise_;
};

// ||Lambda(t - ., x - *)||_{0,Z}^2 for a stationary Z with spectrum nu.
template <RadialKernel K>
double norm_0Z(const K& kernel, const Mollifier& moll, const DiscreteSpectralMeasure& m,
               const TimeGrid& time, std::size_t target_step,
               const IntegrandSpectrum& nu) {
  return NormTables(kernel, moll.on_grid(m.grid), m, time, target_step).norm0(nu);
}

// ||Lambda||_{1,Z}^2 = E int_0^t (int Lambda(s, x - z) Z(s, z) dz)^2 ds.
template <RadialKernel K>
double norm_1Z(const K& kernel, const Mollifier& moll, const DiscreteSpectralMeasure& m,
               const TimeGrid& time, std::size_t target_step,
               const IntegrandSpectrum& nu) {
  return NormTables(kernel, moll.on_grid(m.grid), m, time, target_step).norm1(nu);
}

// Exact squared norm sum_{j<i} dt ||Phi_j||_H^2 for a deterministic Z,
// stationary or not.
template <RadialKernel K>
double norm_0Z_deterministic(const K& kernel, const Mollifier& moll,
                             const AdaptedIntegrand& z, const DiscreteSpectralMeasure& m,
                             const TimeGrid& time, Target target) {
  auto phi = kernel_integrand(kernel, moll, z, m.grid, time, target);
  CompensatedSum acc;
  for (std::size_t j = 0; j < target.step; ++j)
    acc.add(time.dt * inner_h(phi.row(j), phi.row(j), m));
  return acc.value();
}

// ------------------------------------------------------------- bounds

// sup_s E[Z^2] * sum_{j<i} dt J1(t - s_j), J1 taken on the
// torus lattice.
template <RadialKernel K>
double stochastic_moment_bound(const K& kernel, const Mollifier& moll,
                               const DiscreteSpectralMeasure& m, const TimeGrid& time,
                               std::size_t target_step, double sup_moment) {
  const double t = time.node(target_step);
  CompensatedSum acc;
  for (std::size_t j = 0; j < target_step; ++j)
    acc.add(time.dt * j1_torus(t - time.mid(j), kernel, m, moll));
  return sup_moment * acc.value();
}

// sup_s E[Z^2] * sum_j w_j J2(t - t_j), with J2 the lattice
// maximum of |FG m|^2.  Bounds ||Lambda||_{1,Z}^2.
template <RadialKernel K>
double pathwise_norm_bound(const K& kernel, const Mollifier& moll, const TorusGrid& grid,
                           const TimeGrid& time, std::size_t target_step,
                           double sup_moment) {
  const auto zeta = moll.on_grid(grid);
  const double t = time.node(target_step);
  CompensatedSum acc;
  for (std::size_t j = 0; j <= target_step; ++j) {
    const double w = pathwise_weight(time, j, target_step);
    if (w == 0.0) continue;
    double sup = 0.0;
    for (double v : kernel_multiplier(kernel, grid, zeta, t - time.node(j)))
      sup = std::max(sup, v * v);
    acc.add(w * sup);
  }
  return sup_moment * acc.value();
}

// Bound on E[(pathwise integral)^2]: Cauchy-Schwarz in time adds a factor t.
template <RadialKernel K>
double pathwise_moment_bound(const K& kernel, const Mollifier& moll, const TorusGrid& grid,
                             const TimeGrid& time, std::size_t target_step,
                             double sup_moment) {
  return time.node(target_step) *
         pathwise_norm_bound(kernel, moll, grid, time, target_step, sup_moment);
}

// ------------------------------------------------ mollifier convergence

// ||Lambda_n - Lambda_ref||_{0,Z} for each n, where Lambda_ref carries the
// unit multiplier (the band limit at the grid cutoff).
template <RadialKernel K>
std::vector<double> mollifier_convergence(const K& kernel, MollifierKind family,
                                          std::span<const int> schedule,
                                          const DiscreteSpectralMeasure& m,
                                          const TimeGrid& time, std::size_t target_step,
                                          const IntegrandSpectrum& nu) {
  std::vector<double> out;
  int prev = 0;
  for (int n : schedule) {
    if (n <= prev) throw std::invalid_argument("mollifier schedule must increase");
    prev = n;
    auto diff = Mollifier(family, n).on_grid(m.grid);
    for (double& v : diff) v -= 1.0;
    out.push_back(std::sqrt(NormTables(kernel, diff, m, time, target_step).norm0(nu)));
  }
  return out;
}

// ------------------------------------------------------------ report

struct NormReport {
  double norm0_sq = 0.0;   // ||.||_{0,Z}^2 (replica mean of per-path values)
  double norm1_sq = 0.0;   // ||.||_{1,Z}^2
  double mc_second_moment = 0.0;
  double mc_se = 0.0;
  std::size_t replicas = 0;
  // Paired test of E[X^2 - q] = 0, q the per-path norm.
  double gap_mean = 0.0;
  double gap_se = 0.0;
  double pathwise_second_moment = 0.0;
  double pathwise_se = 0.0;

  bool isometry_holds(double z = 3.0) const {
    return std::abs(gap_mean) <= z * gap_se + 1e-14 * std::abs(norm0_sq);
  }
};

struct IsometryAccumulator {
  Moments stochastic, gap, norm0, norm1, pathwise;
  void merge(const IsometryAccumulator& o) {
    stochastic.merge(o.stochastic);
    gap.merge(o.gap);
    norm0.merge(o.norm0);
    norm1.merge(o.norm1);
    pathwise.merge(o.pathwise);
  }
};

// Folds one path: X = CD integral of Z, q = per-path 0,Z norm.
template <RadialKernel K>
void add_isometry_sample(IsometryAccumulator& acc, const NormTables& tables, const K& kernel,
                         const Mollifier& moll, const AdaptedIntegrand& z,
                         const NoiseIncrements& noise, const DiscreteSpectralMeasure& m,
                         Target target) {
  const double x = cd_integral(kernel, moll, z, noise, m, target);
  const double p = pathwise_integral(kernel, moll, z, m.grid, noise.time, target);
  auto nu = IntegrandSpectrum::of_path(z, m.grid);
  const double q = tables.norm0(nu);
  acc.stochastic.add(x);
  acc.gap.add(x * x - q);
  acc.norm0.add(q);
  acc.norm1.add(tables.norm1(nu));
  acc.pathwise.add(p);
}

// Rejects estimates whose relative standard error exceeds max_rel_se.
inline NormReport finish_isometry(const IsometryAccumulator& acc, double max_rel_se = 0.1) {
  NormReport r;
  r.replicas = acc.stochastic.count();
  if (r.replicas < 2) throw std::runtime_error("norm estimate needs at least 2 replicas");
  r.norm0_sq = acc.norm0.mean();
  r.norm1_sq = acc.norm1.mean();
  if (r.norm0_sq > 0.0 && acc.norm0.mean_se() > max_rel_se * r.norm0_sq)
    throw std::runtime_error("too few replicas: spectral estimate of the norm has SE " +
                             std::to_string(acc.norm0.mean_se()) + " for value " +
                             std::to_string(r.norm0_sq));
  r.mc_second_moment = acc.stochastic.second_moment();
  r.mc_se = acc.stochastic.second_moment_se();
  r.gap_mean = acc.gap.mean();
  r.gap_se = acc.gap.mean_se();
  r.pathwise_second_moment = acc.pathwise.second_moment();
  r.pathwise_se = acc.pathwise.second_moment_se();
  return r;
}

}  // namespace swave
