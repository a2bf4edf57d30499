#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/stationarity.hpp"
#include "swave/kernels/conditions.hpp"
#include "swave/malliavin/derivative.hpp"
#include "swave/solver/reports.hpp"

namespace swave {

// ----------------------------------------------------------- fd check

// Geometric schedule from `hi` down to `lo` with `per_decade` points per decade.
inline std::vector<double> epsilon_schedule(double hi = 1e-1, double lo = 1e-4,
                                            int per_decade = 4) {
  if (!(hi > lo) || !(lo > 0.0) || per_decade < 1)
    throw std::invalid_argument("epsilon schedule needs hi > lo > 0");
  const int count = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> out;
  for (int k = 0; k <= count; ++k) out.push_back(hi * std::pow(10.0, -double(k) / per_decade));
  return out;
}

// Least-squares slope of log(error) against log(eps) over the points with
// eps in [lo, hi] and a positive error; NaN with fewer than two points.
inline double log_slope(const std::vector<double>& eps, const std::vector<double>& err,
                        double lo, double hi) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < eps.size(); ++k)
    if (eps[k] >= lo * (1 - 1e-12) && eps[k] <= hi * (1 + 1e-12) && err[k] > 0.0) {
      x.push_back(std::log(eps[k]));
      y.push_back(std::log(err[k]));
    }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

struct FdVariant {
  std::vector<double> errors;
  double slope = 0.0;       // middle decade
  double slope_all = 0.0;   // whole schedule
  double max_error = 0.0;
  bool exact = false;       // every error at rounding level
  bool valid = false;       // exact, or middle-decade slope in [0.8, 1.2]
};

struct FdReport {
  std::vector<double> eps;
  double derivative = 0.0;  // <Du(t, x), h>
  FdVariant verbatim, all_terms;
  std::string validating() const {
    if (verbatim.valid && all_terms.valid) return "both";
    if (all_terms.valid) return "all-terms";
    if (verbatim.valid) return "verbatim";
    return "none";
  }
};

template <RadialKernel K = WaveKernel>
FdReport fd_check(const SolverConfig& cfg, const Coefficients& co, const NoiseIncrements& noise,
                  const ConsBasis& basis, const ShiftDirection& h, Target target,
                  std::vector<double> eps = epsilon_schedule(), const K& kernel = {}) {
  if (eps.size() < 2) throw std::invalid_argument("fd check needs at least two step sizes");
  for (double e : eps)
    if (!(e > 0.0)) throw std::invalid_argument("fd step sizes must be positive");
  auto u = solve_mild(cfg, co, noise, kernel);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, h, kernel);
  FdReport rep;
  rep.eps = eps;
  rep.derivative = d.at(target.step, target.point);
  const double base = u.at(target.step, target.point);
  const double lo = *std::min_element(eps.begin(), eps.end());
  const double hi = *std::max_element(eps.begin(), eps.end());
  // Middle decade of the schedule on a log scale.
  const double centre = std::sqrt(lo * hi);
  const double mid_lo = centre / std::sqrt(10.0), mid_hi = centre * std::sqrt(10.0);
  for (bool all : {false, true}) {
    SolverConfig c = cfg;
    c.shifted_all_terms = all;
    FdVariant& v = all ? rep.all_terms : rep.verbatim;
    double floor = 0.0;
    for (double e : eps) {
      auto ue = solve_shifted(c, co, noise, basis, h.scaled(e), kernel);
      double err = std::abs((ue.at(target.step, target.point) - base) / e - rep.derivative);
      v.errors.push_back(err);
      v.max_error = std::max(v.max_error, err);
      // Cancellation error of the difference quotient.
      floor = std::max(floor, 1e-11 * (std::abs(base) + std::abs(rep.derivative) * e + 1.0) / e);
    }
    v.slope = log_slope(eps, v.errors, mid_lo, mid_hi);
    v.slope_all = log_slope(eps, v.errors, lo, hi);
    v.exact = v.max_error <= floor;
    v.valid = v.exact || (v.slope >= 0.8 && v.slope <= 1.2);
  }
  return rep;
}

// ------------------------------------------------------ nondegeneracy

struct NondegeneracyLevel {
  double delta = 0.0;
  std::size_t window = 0;  // steps in [t - delta, t]
  double j = 0.0;          // J(delta), midpoint rule on the solver steps
  double jbar = 0.0;
  Moments remainder;       // I(t, x; delta)
  Moments small;           // 1{||Du||^2 < sigma^2 J(delta) / 3}
  std::size_t bound_violations = 0;  // ||Du||^2 < sigma^2 J / 2 - I

  double ratio() const { return remainder.mean() / (j * jbar); }
  double ratio_se() const { return remainder.mean_se() / (j * jbar); }
};

struct NondegeneracyReport {
  Target target;
  double sigma = 0.0;
  double j_total = 0.0;  // J_n(t)
  Moments norm_sq;       // ||Du(t, x)||^2 (its second moment is E||Du||^4)
  double norm_sq_min = 0.0, norm_sq_max = 0.0;  // extremes over the replicas
  std::vector<NondegeneracyLevel> levels;
  std::size_t replicas = 0;

  // The ratio never grows by more than 3 SE from one delta to the next.
  bool ratio_bounded() const {
    for (std::size_t k = 1; k < levels.size(); ++k) {
      double se = std::hypot(levels[k].ratio_se(), levels[k - 1].ratio_se());
      if (levels[k].ratio() > levels[k - 1].ratio() + 3.0 * se) return false;
    }
    return true;
  }
  // Small-ball frequencies do not increase and end at most at 3 / N.
  bool probability_vanishes() const {
    for (std::size_t k = 1; k < levels.size(); ++k)
      if (levels[k].small.mean() > levels[k - 1].small.mean()) return false;
    return levels.empty() ||
           levels.back().small.mean() * static_cast<double>(replicas) <= 3.0;
  }
};

template <RadialKernel K = WaveKernel>
NondegeneracyReport nondegeneracy(const SolverConfig& cfg, const Coefficients& co,
                                  const ConsBasis& basis, Target target,
                                  const std::vector<double>& deltas, const ReplicaPlan& plan,
                                  const K& kernel = {}) {
  if (!co.sigma.is_constant())
    throw std::invalid_argument("nondegeneracy needs a constant sigma");
  if (target.step == 0) throw std::invalid_argument("nondegeneracy needs t > 0");
  if (plan.replicas < 2) throw std::invalid_argument("nondegeneracy needs >= 2 replicas");
  const TimeGrid& time = cfg.time;
  const double t = time.node(target.step);
  const double sigma = co.sigma(0.0);
  NondegeneracyReport rep;
  rep.target = target;
  rep.sigma = sigma;
  rep.replicas = plan.replicas;
  rep.j_total = j_delta(t, kernel, cfg.measure, cfg.mollifier, TimeRule::midpoint(target.step));
  for (double delta : deltas) {
    if (!(delta > 0.0) || delta > t * (1 + 1e-12))
      throw std::invalid_argument("delta must lie in (0, t]");
    const double steps = delta / time.dt;
    const auto window = static_cast<std::size_t>(std::llround(steps));
    if (window == 0 || std::abs(steps - window) > 1e-9 * steps)
      throw std::invalid_argument("delta must be a whole number of time steps");
    NondegeneracyLevel lv;
    lv.delta = delta;
    lv.window = window;
    lv.j = j_delta(delta, kernel, cfg.measure, cfg.mollifier, TimeRule::midpoint(window));
    lv.jbar = jbar_delta(delta, kernel);
    rep.levels.push_back(lv);
  }
  struct Acc {
    Moments norm;
    double lo, hi;
    std::vector<NondegeneracyLevel> levels;
    void merge(const Acc& o) {
      norm.merge(o.norm);
      lo = std::min(lo, o.lo);
      hi = std::max(hi, o.hi);
      for (std::size_t k = 0; k < levels.size(); ++k) {
        levels[k].remainder.merge(o.levels[k].remainder);
        levels[k].small.merge(o.levels[k].small);
        levels[k].bound_violations += o.levels[k].bound_violations;
      }
    }
  };
  const std::size_t B = basis.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto acc = run_replicas(plan.replicas, plan.workers, Acc{{}, inf, -inf, rep.levels},
                          [&](std::size_t r, Acc& a) {
    auto noise = sample_increments(cfg.measure, time, {plan.seed, r});
    auto u = solve_mild(cfg, co, noise, kernel);
    auto sweep = adjoint_sweep(cfg, co, noise, u, target, kernel);
    auto full = dual_field(basis, time, sweep.full);
    auto first = dual_field(basis, time, sweep.first);
    const double norm = full.norm_sq();
    a.norm.add(norm);
    a.lo = std::min(a.lo, norm);
    a.hi = std::max(a.hi, norm);
    for (auto& lv : a.levels) {
      CompensatedSum rem;
      for (std::size_t j = target.step - lv.window; j < target.step; ++j)
        for (std::size_t i = 0; i < B; ++i) {
          double diff = full.at(j, i) - first.at(j, i);
          rem.add(diff * diff * time.dt);
        }
      const double I = rem.value();
      lv.remainder.add(I);
      lv.small.add(norm < sigma * sigma * lv.j / 3.0 ? 1.0 : 0.0);
      if (norm < 0.5 * sigma * sigma * lv.j - I - 1e-12 * lv.j) ++lv.bound_violations;
    }
  });
  rep.norm_sq = acc.norm;
  rep.norm_sq_min = acc.lo;
  rep.norm_sq_max = acc.hi;
  rep.levels = acc.levels;
  return rep;
}

// ------------------------------------------------- uniform derivative bound

struct DerivativeMomentReport {
  std::vector<Mollifier> schedule;
  std::vector<SupMoment> levels;  // E||Du_n(t, x)||^2
  std::size_t replicas = 0;
  std::size_t burn_in = 1;
  bool stable = false;   // levels after burn-in agree within 3 SE
  bool bounded = false;  // no level exceeds the last by more than 3 SE
};

template <RadialKernel K = WaveKernel>
DerivativeMomentReport derivative_moment_report(const SolverConfig& cfg, const Coefficients& co,
                                                const ConsBasis& basis, Target target,
                                                const std::vector<Mollifier>& schedule,
                                                const ReplicaPlan& plan, std::size_t burn_in = 1,
                                                const K& kernel = {}) {
  if (schedule.empty()) throw std::invalid_argument("derivative report needs a schedule");
  if (plan.replicas < 2) throw std::invalid_argument("derivative report needs >= 2 replicas");
  struct Acc {
    std::vector<Moments> m;
    void merge(const Acc& o) {
      for (std::size_t k = 0; k < m.size(); ++k) m[k].merge(o.m[k]);
    }
  };
  auto acc = run_replicas(plan.replicas, plan.workers, Acc{std::vector<Moments>(schedule.size())},
                          [&](std::size_t r, Acc& a) {
    auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
    for (std::size_t l = 0; l < schedule.size(); ++l) {
      auto un = solve_mollified(cfg, co, noise, schedule[l], kernel);
      a.m[l].add(solve_derivative_mollified(cfg, co, noise, un, schedule[l], basis, target,
                                            kernel)
                     .norm_sq());
    }
  });
  DerivativeMomentReport rep;
  rep.schedule = schedule;
  rep.replicas = plan.replicas;
  rep.burn_in = std::min(burn_in, schedule.size() - 1);
  for (const auto& m : acc.m) rep.levels.push_back({m.mean(), m.mean_se(), target.step, target.point});
  rep.stable = levels_agree(rep.levels, rep.burn_in);
  rep.bounded = true;
  const auto& last = rep.levels.back();
  for (const auto& l : rep.levels)
    if (l.value > last.value + 3.0 * std::hypot(l.se, last.se)) rep.bounded = false;
  return rep;
}

// ------------------------------------------------ stationarity of D(B(u))

struct DerivativeStationarity {
  StationarityReport report;
  double max_slope = 0.0;  // max |B'(u)| seen on the samples
};

// E[<D B(u(t, x)), D B(u(t, x + y))>_{H_T}] compared across x.
template <RadialKernel K = WaveKernel>
DerivativeStationarity stationarity_check_DBu(const SolverConfig& cfg, const Coefficients& co,
                                              const ConsBasis& basis, std::size_t step,
                                              const Coefficient& transform,
                                              const ReplicaPlan& plan, const K& kernel = {}) {
  if (step == 0 || step > cfg.time.steps)
    throw std::out_of_range("stationarity step must lie in (0, steps]");
  const TorusGrid& g = cfg.grid();
  const std::size_t M = g.size();
  const std::size_t channels = cfg.time.steps * basis.size();
  require_capacity(basis, cfg.time);
  struct Acc {
    StationarityAccumulator st;
    double slope = 0.0;
    void merge(const Acc& o) {
      st.merge(o.st);
      slope = std::max(slope, o.slope);
    }
  };
  const double root_dt = std::sqrt(cfg.time.dt);
  auto acc = run_replicas(plan.replicas, plan.workers,
                          Acc{StationarityAccumulator(g, channels), 0.0},
                          [&](std::size_t r, Acc& a) {
    auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
    auto u = solve_mild(cfg, co, noise, kernel);
    std::vector<double> sample(channels * M);
    for (std::size_t x = 0; x < M; ++x) {
      const double slope = transform.derivative(u.at(step, x));
      a.slope = std::max(a.slope, std::abs(slope));
      auto du = solve_derivative_full(cfg, co, noise, u, basis, {step, x}, kernel);
      for (std::size_t c = 0; c < channels; ++c)
        sample[c * M + x] = root_dt * slope * du.field.coeff[c];
    }
    a.st.add(sample);
  });
  return {acc.st.report(), acc.slope};
}

}  // namespace swave
