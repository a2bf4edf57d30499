#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "swave/core/parallel.hpp"
#include "swave/core/stationarity.hpp"
#include "swave/core/stats.hpp"
#include "swave/kernels/conditions.hpp"
#include "swave/solver/solver.hpp"

namespace swave {

// Per-cell second moments of a family of fields over (t_j, z_m).
class FieldMoments {
 public:
  FieldMoments() = default;
  FieldMoments(std::size_t levels, std::size_t cells)
      : cells_(cells), cell_(levels * cells) {}

  void add(std::size_t level, std::span<const double> values) {
    if (values.size() != cells_) throw std::invalid_argument("field size mismatch");
    Moments* row = cell_.data() + level * cells_;
    for (std::size_t c = 0; c < cells_; ++c) row[c].add(values[c]);
  }
  void merge(const FieldMoments& o) {
    if (cell_.empty()) {
      *this = o;
      return;
    }
    for (std::size_t n = 0; n < cell_.size(); ++n) cell_[n].merge(o.cell_[n]);
  }
  const Moments& at(std::size_t level, std::size_t cell) const {
    return cell_[level * cells_ + cell];
  }
  std::size_t cells() const noexcept { return cells_; }
  std::size_t count() const { return cell_.empty() ? 0 : cell_[0].count(); }

 private:
  std::size_t cells_ = 0;
  std::vector<Moments> cell_;
};

struct SupMoment {
  double value = 0.0;
  double se = 0.0;
  std::size_t step = 0;
  std::size_t point = 0;
};

// sup over the lattice and time steps of the per-cell E[X^2].
inline SupMoment sup_second_moment(const FieldMoments& fm, std::size_t level, std::size_t points) {
  SupMoment best;
  for (std::size_t c = 0; c < fm.cells(); ++c) {
    const auto& m = fm.at(level, c);
    double v = m.second_moment();
    if (v > best.value || c == 0) {
      best.value = v;
      best.se = m.count() > 1 ? m.second_moment_se() : 0.0;
      best.step = c / points;
      best.point = c % points;
    }
  }
  return best;
}

// Levels after `burn_in` whose sup moments all agree within 3 combined SE.
inline bool levels_agree(const std::vector<SupMoment>& levels, std::size_t burn_in) {
  for (std::size_t a = burn_in; a < levels.size(); ++a)
    for (std::size_t b = a + 1; b < levels.size(); ++b) {
      double se = std::hypot(levels[a].se, levels[b].se);
      if (std::abs(levels[a].value - levels[b].value) > 3.0 * se) return false;
    }
  return true;
}

// Smallest C with f_i <= C exp(C I_i) at every step, by bisection on each
// constraint (the right side is increasing in C).
inline double gronwall_constant(const std::vector<double>& values,
                                const std::vector<double>& integrals) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = values[i];
    if (!(f > 0.0)) continue;
    if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
    auto rhs = [&](double c) { return c * std::exp(c * integrals[i]); };
    double lo = 0.0, hi = std::max(1.0, f);
    while (rhs(hi) < f) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      (rhs(mid) < f ? lo : hi) = mid;
    }
    worst = std::max(worst, hi);
  }
  return worst;
}

// int_0^{t_i} (J1 + J2)(s) ds by the midpoint rule on the solver steps.
template <RadialKernel K>
std::vector<double> j_sum_integrals(const K& kernel, const DiscreteSpectralMeasure& m,
                                    const Mollifier& moll, const TimeGrid& time) {
  std::vector<double> out(time.steps + 1, 0.0);
  for (std::size_t i = 1; i <= time.steps; ++i) {
    const double s = time.mid(i - 1);
    out[i] = out[i - 1] + time.dt * (j1_torus(s, kernel, m, moll) + kernel.sup_sq(s));
  }
  return out;
}

struct ReplicaPlan {
  std::uint64_t seed = 0;
  std::size_t replicas = 100;
  unsigned workers = 1;
};

struct MomentReport {
  std::vector<Mollifier> schedule;
  std::vector<SupMoment> levels;
  // sup_x E[u_n(t_j, x)^2] per level and step.
  std::vector<std::vector<double>> per_step;
  std::size_t replicas = 0;
  std::size_t burn_in = 1;
  bool uniform = false;
  double gronwall_c = 0.0;
};

template <RadialKernel K = WaveKernel>
MomentReport moment_report(const SolverConfig& cfg, const Coefficients& co,
                           const std::vector<Mollifier>& schedule, const ReplicaPlan& plan,
                           std::size_t burn_in = 1, const K& kernel = {}) {
  if (plan.replicas < 100) throw std::invalid_argument("moment report needs >= 100 replicas");
  if (schedule.empty()) throw std::invalid_argument("moment report needs a schedule");
  const std::size_t M = cfg.grid().size();
  const std::size_t cells = (cfg.time.steps + 1) * M;
  auto acc = run_replicas(plan.replicas, plan.workers, FieldMoments(schedule.size(), cells),
                          [&](std::size_t r, FieldMoments& fm) {
                            auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
                            for (std::size_t l = 0; l < schedule.size(); ++l)
                              fm.add(l, solve_mollified(cfg, co, noise, schedule[l], kernel).values);
                          });
  MomentReport rep;
  rep.schedule = schedule;
  rep.replicas = plan.replicas;
  rep.burn_in = std::min(burn_in, schedule.size() - 1);
  double gc = 0.0;
  for (std::size_t l = 0; l < schedule.size(); ++l) {
    rep.levels.push_back(sup_second_moment(acc, l, M));
    std::vector<double> steps(cfg.time.steps + 1, 0.0);
    for (std::size_t c = 0; c < cells; ++c)
      steps[c / M] = std::max(steps[c / M], acc.at(l, c).second_moment());
    gc = std::max(gc, gronwall_constant(
                          steps, j_sum_integrals(kernel, cfg.measure, schedule[l], cfg.time)));
    rep.per_step.push_back(std::move(steps));
  }
  rep.gronwall_c = gc;
  rep.uniform = levels_agree(rep.levels, rep.burn_in);
  return rep;
}

struct ConvergenceReport {
  std::vector<Mollifier> schedule;
  std::vector<SupMoment> levels;  // sup E[|u_n - u|^2]
  std::size_t replicas = 0;
  bool monotone = false;
  // Index of the first level that is exactly zero on every replica, or
  // schedule.size() if none.
  std::size_t exact_zero_from = 0;
};

template <RadialKernel K = WaveKernel>
ConvergenceReport convergence_report(const SolverConfig& cfg, const Coefficients& co,
                                     const std::vector<Mollifier>& schedule,
                                     const ReplicaPlan& plan, const K& kernel = {}) {
  if (plan.replicas < 2) throw std::invalid_argument("convergence report needs >= 2 replicas");
  if (schedule.empty()) throw std::invalid_argument("convergence report needs a schedule");
  const std::size_t M = cfg.grid().size();
  const std::size_t cells = (cfg.time.steps + 1) * M;
  auto acc = run_replicas(
      plan.replicas, plan.workers, FieldMoments(schedule.size(), cells),
      [&](std::size_t r, FieldMoments& fm) {
        auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
        auto ref = solve_mild(cfg, co, noise, kernel);
        std::vector<double> diff(cells);
        for (std::size_t l = 0; l < schedule.size(); ++l) {
          auto un = solve_mollified(cfg, co, noise, schedule[l], kernel);
          for (std::size_t c = 0; c < cells; ++c) diff[c] = un.values[c] - ref.values[c];
          fm.add(l, diff);
        }
      });
  ConvergenceReport rep;
  rep.schedule = schedule;
  rep.replicas = plan.replicas;
  rep.exact_zero_from = schedule.size();
  rep.monotone = true;
  for (std::size_t l = 0; l < schedule.size(); ++l) {
    rep.levels.push_back(sup_second_moment(acc, l, M));
    if (l > 0 && rep.levels[l].value > rep.levels[l - 1].value) rep.monotone = false;
  }
  for (std::size_t l = schedule.size(); l-- > 0;) {
    if (rep.levels[l].value != 0.0) break;
    rep.exact_zero_from = l;
  }
  return rep;
}

// (5.b): sup over random unit directions of sup_{t,x} E[(u^h)^2].
struct ShiftedMomentReport {
  std::size_t directions = 0;
  std::size_t replicas = 0;
  SupMoment worst;
  std::size_t worst_direction = 0;
};

// Gaussian coefficients scaled to unit H_T norm; deterministic in (seed, index).
inline ShiftDirection random_unit_direction(const ConsBasis& basis, const TimeGrid& time,
                                            std::uint64_t seed, std::size_t index) {
  ShiftDirection h(time.steps, basis.size(), time.dt);
  const auto key = philox_key(seed);
  for (std::size_t n = 0; n < h.coeff.size(); n += 2) {
    auto [a, b] = philox_normal_pair(
        {0x5eedu, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(n / 2), 7u}, key);
    h.coeff[n] = a;
    if (n + 1 < h.coeff.size()) h.coeff[n + 1] = b;
  }
  return h.scaled(1.0 / h.norm());
}

template <RadialKernel K = WaveKernel>
ShiftedMomentReport shifted_moment_report(const SolverConfig& cfg, const Coefficients& co,
                                          const ConsBasis& basis, std::size_t directions,
                                          const ReplicaPlan& plan, const K& kernel = {}) {
  if (directions == 0) throw std::invalid_argument("need at least one direction");
  if (plan.replicas < 2) throw std::invalid_argument("shifted moments need >= 2 replicas");
  const std::size_t M = cfg.grid().size();
  const std::size_t cells = (cfg.time.steps + 1) * M;
  std::vector<ShiftDirection> hs;
  for (std::size_t d = 0; d < directions; ++d)
    hs.push_back(random_unit_direction(basis, cfg.time, plan.seed, d));
  auto acc = run_replicas(plan.replicas, plan.workers, FieldMoments(directions, cells),
                          [&](std::size_t r, FieldMoments& fm) {
                            auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
                            for (std::size_t d = 0; d < directions; ++d)
                              fm.add(d, solve_shifted(cfg, co, noise, basis, hs[d], kernel).values);
                          });
  ShiftedMomentReport rep;
  rep.directions = directions;
  rep.replicas = plan.replicas;
  for (std::size_t d = 0; d < directions; ++d) {
    auto s = sup_second_moment(acc, d, M);
    if (d == 0 || s.value > rep.worst.value) {
      rep.worst = s;
      rep.worst_direction = d;
    }
  }
  return rep;
}

struct SolutionStationarity {
  StationarityReport field;  // u
  StationarityReport sine;   // sin(u)
  bool passed() const { return field.passed && sine.passed; }
};

template <RadialKernel K = WaveKernel>
SolutionStationarity solution_stationarity(const SolverConfig& cfg, const Coefficients& co,
                                           std::size_t step, const ReplicaPlan& plan,
                                           const K& kernel = {}) {
  if (step > cfg.time.steps) throw std::out_of_range("stationarity step beyond the horizon");
  const TorusGrid& g = cfg.grid();
  struct Acc {
    StationarityAccumulator u, s;
    void merge(const Acc& o) {
      u.merge(o.u);
      s.merge(o.s);
    }
  };
  auto acc = run_replicas(plan.replicas, plan.workers,
                          Acc{StationarityAccumulator(g), StationarityAccumulator(g)},
                          [&](std::size_t r, Acc& a) {
                            auto noise = sample_increments(cfg.measure, cfg.time, {plan.seed, r});
                            auto u = solve_mild(cfg, co, noise, kernel);
                            auto row = u.row(step);
                            std::vector<double> sine(row.size());
                            for (std::size_t m = 0; m < row.size(); ++m)
                              sine[m] = std::sin(row[m]);
                            a.u.add(row);
                            a.s.add(sine);
                          });
  return {acc.u.report(), acc.s.report()};
}

}  // namespace swave
