#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/parallel.hpp"
#include "swave/core/stats.hpp"
#include "swave/kernels/conditions.hpp"
#include "swave/malliavin/derivative.hpp"
#include "swave/solver/reports.hpp"

namespace swave {

// Values of u(t, x) across replicas, in replica order.
struct SampleSet {
  std::vector<double> values;
  std::string digest;
};

template <RadialKernel K = WaveKernel>
SampleSet collect_samples(const SolverConfig& cfg, const Coefficients& co, Target target,
                          const ReplicaPlan& plan, const K& kernel = {}) {
  if (target.step > cfg.time.steps || target.point >= cfg.grid().size())
    throw std::out_of_range("sample target outside the grid");
  auto table = run_replicas(plan.replicas, plan.workers, ReplicaTable<double>{},
                            [&](std::size_t r, ReplicaTable<double>& t) {
                              auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
                              t.rows.emplace_back(
                                  r, solve_mild(cfg, co, noise, kernel).at(target.step, target.point));
                            });
  std::sort(table.rows.begin(), table.rows.end());
  SampleSet out;
  for (const auto& [r, v] : table.rows) out.values.push_back(v);
  return out;
}

// --------------------------------------------------------- Gaussian oracle

struct GaussianOracleReport {
  double oracle_variance = 0.0;  // sigma^2 J_n(t)
  double second_moment = 0.0;
  double second_moment_se = 0.0;
  bool variance_ok = false;  // within 3 SE
  KsResult ks;
  bool passed() const { return variance_ok && ks.passed; }
};

template <RadialKernel K = WaveKernel>
double linear_oracle_variance(const SolverConfig& cfg, const Coefficients& co,
                              std::size_t step, const K& kernel = {}) {
  if (!co.sigma.is_constant() || !co.drift.is_zero())
    throw std::invalid_argument("the Gaussian oracle needs constant sigma and zero drift");
  if (step == 0) return 0.0;
  const double sigma = co.sigma(0.0);
  return sigma * sigma *
         j_delta(cfg.time.node(step), kernel, cfg.measure, cfg.mollifier,
                 TimeRule::midpoint(step));
}

template <RadialKernel K = WaveKernel>
GaussianOracleReport gaussian_oracle_check(const SampleSet& samples, const SolverConfig& cfg,
                                           const Coefficients& co, std::size_t step,
                                           double alpha = 0.01, const K& kernel = {}) {
  if (samples.values.size() < 2) throw std::invalid_argument("Gaussian check needs samples");
  GaussianOracleReport rep;
  rep.oracle_variance = linear_oracle_variance(cfg, co, step, kernel);
  if (!(rep.oracle_variance > 0.0))
    throw std::invalid_argument("Gaussian check needs a positive oracle variance");
  Moments m;
  for (double v : samples.values) m.add(v);
  rep.second_moment = m.second_moment();
  rep.second_moment_se = m.second_moment_se();
  rep.variance_ok =
      std::abs(rep.second_moment - rep.oracle_variance) <= 3.0 * rep.second_moment_se;
  const double sd = std::sqrt(rep.oracle_variance);
  rep.ks = ks_test(samples.values, [sd](double x) { return normal_cdf(x / sd); }, alpha);
  return rep;
}

// -------------------------------------------------------------------- KDE

struct KdeCurve {
  std::vector<double> x, density;
  double bandwidth = 0.0;
  double raw_mass = 0.0;  // trapezoid integral before normalization
  bool degenerate = false;
};

inline double silverman_bandwidth(std::vector<double> v) {
  const double n = static_cast<double>(v.size());
  Moments m;
  for (double x : v) m.add(x);
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    double pos = p * (n - 1.0);
    auto lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::sqrt(std::max(m.variance(), 0.0));
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  return 0.9 * spread * std::pow(n, -0.2);
}

// Gaussian-kernel density estimate on `points` nodes spanning the data
// +/- 8 bandwidths, normalized to unit trapezoid mass.  A zero bandwidth
// picks Silverman's rule.
inline KdeCurve kde(const std::vector<double>& samples, double bandwidth = 0.0,
                    std::size_t points = 512) {
  if (samples.size() < 1000) throw std::invalid_argument("KDE needs at least 1000 samples");
  if (points < 16) throw std::invalid_argument("KDE needs at least 16 nodes");
  if (bandwidth < 0.0) throw std::invalid_argument("KDE bandwidth must be >= 0");
  KdeCurve out;
  auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) {
    out.degenerate = true;
    return out;
  }
  out.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  if (!(out.bandwidth > 0.0)) {
    out.degenerate = true;
    return out;
  }
  const double h = out.bandwidth;
  const double lo = *lo_it - 8.0 * h, hi = *hi_it + 8.0 * h;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double norm = 1.0 / (samples.size() * h * std::sqrt(2.0 * std::numbers::pi));
  out.x.resize(points);
  out.density.assign(points, 0.0);
  for (std::size_t p = 0; p < points; ++p) {
    const double x = lo + p * step;
    out.x[p] = x;
    CompensatedSum acc;
    for (double s : samples) {
      double z = (x - s) / h;
      acc.add(std::exp(-0.5 * z * z));
    }
    out.density[p] = acc.value() * norm;
  }
  double mass = 0.0;
  for (std::size_t p = 0; p + 1 < points; ++p)
    mass += 0.5 * step * (out.density[p] + out.density[p + 1]);
  out.raw_mass = mass;
  for (double& d : out.density) d /= mass;
  return out;
}

inline double kde_mass(const KdeCurve& c) {
  double mass = 0.0;
  for (std::size_t p = 0; p + 1 < c.x.size(); ++p)
    mass += 0.5 * (c.x[p + 1] - c.x[p]) * (c.density[p] + c.density[p + 1]);
  return mass;
}

// ---------------------------------------------------------------- atoms

struct AtomReport {
  std::size_t samples = 0;
  std::size_t repeats = 0;  // values equal to another sample
  bool continuous() const { return repeats == 0; }
};

inline AtomReport detect_atoms(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  AtomReport r;
  r.samples = values.size();
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] == values[i - 1]) ++r.repeats;
  return r;
}

// --------------------------------------------------- Bouleau-Hirsch proxy

struct BhReport {
  std::vector<double> thresholds;  // n; the event is ||Du||^2 < 1/n
  std::vector<Moments> probability;
  std::size_t replicas = 0;
  bool non_increasing() const {
    for (std::size_t k = 1; k < probability.size(); ++k)
      if (probability[k].mean() > probability[k - 1].mean()) return false;
    return true;
  }
};

template <RadialKernel K = WaveKernel>
BhReport bh_probability(const SolverConfig& cfg, const Coefficients& co, const ConsBasis& basis,
                        Target target, std::vector<double> thresholds, const ReplicaPlan& plan,
                        const K& kernel = {}) {
  if (target.step == 0) throw std::invalid_argument("Bouleau-Hirsch proxy needs t > 0");
  if (thresholds.empty()) throw std::invalid_argument("Bouleau-Hirsch proxy needs thresholds");
  for (double n : thresholds)
    if (!(n > 0.0)) throw std::invalid_argument("Bouleau-Hirsch thresholds must be positive");
  std::sort(thresholds.begin(), thresholds.end());
  struct Acc {
    std::vector<Moments> p;
    void merge(const Acc& o) {
      for (std::size_t k = 0; k < p.size(); ++k) p[k].merge(o.p[k]);
    }
  };
  auto acc = run_replicas(plan.replicas, plan.workers,
                          Acc{std::vector<Moments>(thresholds.size())},
                          [&](std::size_t r, Acc& a) {
    auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
    auto u = solve_mild(cfg, co, noise, kernel);
    const double norm = solve_derivative_full(cfg, co, noise, u, basis, target, kernel).norm_sq();
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      a.p[k].add(norm < 1.0 / thresholds[k] ? 1.0 : 0.0);
  });
  return {thresholds, acc.p, plan.replicas};
}

}  // namespace swave
