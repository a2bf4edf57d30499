#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/numerics.hpp"
#include "swave/kernels/mollifier.hpp"
#include "swave/kernels/spectral_measure.hpp"
#include "swave/kernels/wave_kernel.hpp"
#include "swave/noise/discrete_measure.hpp"

namespace swave {

// ---------------------------------------------------------------- J1

// Finite search grid for the supremum over eta: lattice points
// m * spacing with |m|_inf <= half_width, plus eta = -xi_k for the
// `atom_candidates` heaviest atoms.
struct EtaSearch {
  double spacing = 0.5;
  int half_width = 1;
  std::size_t atom_candidates = 8;

  std::string describe() const {
    return "box(spacing=" + std::to_string(spacing) +
           ", half_width=" + std::to_string(half_width) +
           ") + heaviest " + std::to_string(atom_candidates) + " atoms";
  }
};

struct J1Result {
  double value = 0.0;
  std::vector<double> argmax;
  std::string search;
};

namespace detail {

inline std::vector<std::vector<double>> eta_candidates(
    const DiscreteSpectralMeasure& m, const EtaSearch& search) {
  const TorusGrid& g = m.grid;
  const int d = g.dim();
  std::vector<std::vector<double>> out;
  const int side = 2 * search.half_width + 1;
  std::size_t count = 1;
  for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(side);
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> eta(d);
    std::size_t rest = c;
    for (int a = 0; a < d; ++a) {
      int step = static_cast<int>(rest % side) - search.half_width;
      rest /= side;
      eta[a] = step * search.spacing;
    }
    out.push_back(std::move(eta));
  }
  std::vector<std::size_t> order(g.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return m.weights[a] > m.weights[b];
  });
  for (std::size_t i = 0; i < std::min(search.atom_candidates, order.size());
       ++i) {
    if (m.weights[order[i]] <= 0.0) break;
    std::vector<double> eta(d);
    for (int a = 0; a < d; ++a) eta[a] = -g.frequency(order[i], a);
    out.push_back(std::move(eta));
  }
  return out;
}

}  // namespace detail

// max over the search grid of sum_k w_k |FG(s)(xi_k + eta)|^2; a lower
// bound for the true supremum.
template <RadialKernel K>
J1Result j1(double s, const K& kernel, const DiscreteSpectralMeasure& m,
            const EtaSearch& search = {}) {
  if (m.weights.empty() || m.positive_count() == 0)
    throw std::invalid_argument("j1 on an empty measure");
  for (double w : m.weights)
    if (!std::isfinite(w)) throw std::invalid_argument("j1: non-finite weight");
  const TorusGrid& g = m.grid;
  const int d = g.dim();
  std::vector<std::size_t> support;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (m.weights[k] > 0.0) support.push_back(k);

  J1Result best;
  best.value = -1.0;
  best.search = search.describe();
  for (const auto& eta : detail::eta_candidates(m, search)) {
    CompensatedSum acc;
    for (std::size_t k : support) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        double c = g.frequency(k, a) + eta[a];
        r2 += c * c;
      }
      double v = kernel.ft(s, std::sqrt(r2));
      acc.add(m.weights[k] * v * v);
    }
    if (acc.value() > best.value) {
      best.value = acc.value();
      best.argmax = eta;
    }
  }
  return best;
}

// Exhaustive maximum over lattice shifts with periodic wrap:
// max_q sum_k w_k |FG(s)(xi_{k+q})|^2 zeta(xi_{k+q})^2.  This is the
// constant that bounds second moments of lattice stochastic integrals.
template <RadialKernel K>
double j1_torus(double s, const K& kernel, const DiscreteSpectralMeasure& m,
                const Mollifier& moll = Mollifier::identity()) {
  const TorusGrid& g = m.grid;
  std::vector<double> mult = moll.on_grid(g);
  std::vector<double> sq(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    double v = kernel.ft(s, g.radius(k)) * mult[k];
    sq[k] = v * v;
  }
  double best = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    CompensatedSum acc;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (m.weights[k] > 0.0) acc.add(m.weights[k] * sq[g.shifted(k, q)]);
    best = std::max(best, acc.value());
  }
  return best;
}

// ---------------------------------------------------------- J(delta)

struct TimeRule {
  enum class Kind { exact, gauss, midpoint };
  Kind kind = Kind::exact;
  std::size_t count = 64;  // panels (gauss) or steps (midpoint)

  static TimeRule exact() { return {}; }
  static TimeRule gauss(std::size_t panels) { return {Kind::gauss, panels}; }
  static TimeRule midpoint(std::size_t steps) {
    return {Kind::midpoint, steps};
  }
};

// int_0^delta sin^2(2 pi s r) / (4 pi^2 r^2) ds in closed form.
inline double wave_sq_time_integral(double delta, double r) {
  const double w = 2.0 * std::numbers::pi * r;
  const double x = w * delta;
  if (x < 0.1) {
    double w2 = w * w;
    double d3 = delta * delta * delta;
    double d2 = delta * delta;
    return d3 / 3.0 - w2 * d3 * d2 / 15.0 +
           2.0 * w2 * w2 * d3 * d2 * d2 / 315.0 -
           w2 * w2 * w2 * d3 * d2 * d2 * d2 / 2835.0;
  }
  return delta / (2.0 * w * w) - std::sin(2.0 * x) / (4.0 * w * w * w);
}

namespace detail {

template <RadialKernel K>
double squared_time_integral(const K& kernel, double delta, double r,
                             const TimeRule& rule) {
  switch (rule.kind) {
    case TimeRule::Kind::exact:
      if constexpr (is_wave_kernel_v<K>) {
        return wave_sq_time_integral(delta, r);
      } else {
        return gauss_legendre(
            [&](double s) {
              double v = kernel.ft(s, r);
              return v * v;
            },
            0.0, delta, 64);
      }
    case TimeRule::Kind::gauss:
      return gauss_legendre(
          [&](double s) {
            double v = kernel.ft(s, r);
            return v * v;
          },
          0.0, delta, rule.count);
    case TimeRule::Kind::midpoint: {
      const double h = delta / static_cast<double>(rule.count);
      CompensatedSum acc;
      for (std::size_t j = 0; j < rule.count; ++j) {
        double v = kernel.ft((j + 0.5) * h, r);
        acc.add(v * v * h);
      }
      return acc.value();
    }
  }
  return 0.0;
}

}  // namespace detail

// int_0^delta sum_k w_k |FG(s)(xi_k) zeta(xi_k)|^2 ds.
template <RadialKernel K>
double j_delta(double delta, const K& kernel, const DiscreteSpectralMeasure& m,
               const Mollifier& moll = Mollifier::identity(),
               const TimeRule& rule = TimeRule::exact()) {
  if (!(delta > 0.0)) throw std::invalid_argument("j_delta needs delta > 0");
  const TorusGrid& g = m.grid;
  std::vector<double> mult = moll.on_grid(g);
  CompensatedSum acc;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (m.weights[k] == 0.0 || mult[k] == 0.0) continue;
    acc.add(m.weights[k] * mult[k] * mult[k] *
            detail::squared_time_integral(kernel, delta, g.radius(k), rule));
  }
  return acc.value();
}

template <RadialKernel K>
double jbar_delta(double delta, const K& kernel) {
  if (!(delta > 0.0)) throw std::invalid_argument("jbar_delta needs delta > 0");
  return gauss_legendre([&](double s) { return kernel.sup_sq(s); }, 0.0, delta,
                        4);
}

// ------------------------------------------------------- conditions

enum class Condition { shifted_energy, sup_modulus, dalang };
enum class Verdict { converged, diverging, inconclusive };

inline std::string to_string(Condition c) {
  switch (c) {
    case Condition::shifted_energy: return "shifted_energy";
    case Condition::sup_modulus: return "sup_modulus";
    case Condition::dalang: return "dalang";
  }
  return "unknown";
}

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::diverging: return "diverging";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct ConditionLevel {
  double radius = 0.0;
  double value = 0.0;
};

struct ConditionReport {
  Condition condition = Condition::sup_modulus;
  std::vector<ConditionLevel> levels;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::pair<std::string, double>> constants;
  std::vector<double> eta_radii;
};

struct ConditionOptions {
  double tolerance = 1e-4;
  // |eta| values probed for the supremum (radial measures only need the
  // modulus of eta).
  std::vector<double> eta_radii = {0.0};
  std::size_t angular_nodes = 32;
  std::size_t time_panels = 2;
};

// Standard truncation schedule for the Dalang integral: one level per decade.
inline std::vector<double> decade_schedule(int first, int last) {
  std::vector<double> out;
  for (int e = first; e <= last; ++e) out.push_back(std::pow(10.0, e));
  return out;
}

namespace detail {

// Average of f(|r w + eta|) over the unit sphere, times its area.
template <class F>
double sphere_shell(F&& f, int dim, double r, double eta, std::size_t nodes) {
  if (eta == 0.0) return sphere_area(dim) * f(r);
  if (dim == 1) return f(std::abs(r + eta)) + f(std::abs(r - eta));
  const double lower_sphere = sphere_area(dim - 1);
  auto integrand = [&](double theta) {
    double rho2 = r * r + eta * eta + 2.0 * r * eta * std::cos(theta);
    return f(std::sqrt(std::max(rho2, 0.0))) *
           std::pow(std::sin(theta), dim - 2);
  };
  return lower_sphere *
         gauss_legendre(integrand, 0.0, std::numbers::pi,
                        std::max<std::size_t>(1, nodes / 16));
}

// Cumulative radial integrals int_{|xi| <= R_l} f(|xi + eta|) mu(dxi) for
// every level of the schedule.  Small radii use logarithmic panels; a
// linear panel width caps the resolution for oscillatory integrands.
template <class F>
std::vector<double> radial_partials(F&& f, const SpectralMeasureSpec& spec,
                                    const std::vector<double>& radii,
                                    double eta, std::size_t angular,
                                    double max_linear_width) {
  const int d = spec.dim;
  auto shell = [&](double r) {
    return spec.density(r) * std::pow(r, d - 1) *
           sphere_shell(f, d, r, eta, angular);
  };
  auto log_panel = [&](double a, double b) {
    return gauss_legendre(
        [&](double u) {
          double r = std::exp(u);
          return shell(r) * r;
        },
        std::log(a), std::log(b), 2);
  };
  auto span = [&](double a, double b) {
    if (b <= a) return 0.0;
    double width = b - a;
    if (max_linear_width > 0.0 && width > max_linear_width && a >= 1.0) {
      std::size_t panels =
          static_cast<std::size_t>(std::ceil(width / max_linear_width));
      return gauss_legendre(shell, a, b, panels);
    }
    // log-spaced decades
    CompensatedSum acc;
    double lo = a;
    while (lo < b) {
      double hi = std::min(b, lo * 10.0);
      acc.add(log_panel(lo, hi));
      lo = hi;
    }
    return acc.value();
  };

  std::vector<double> out;
  CompensatedSum total;
  // Near the origin the shell behaves like r^(beta-1); start far below.
  const double start = 1e-40;
  if (spec.kind == MeasureKind::riesz) {
    total.add(riesz_constant(d, spec.beta) * sphere_area(d) * f(eta) *
              std::pow(start, spec.beta) / spec.beta);
  }
  double prev = start;
  double lo_u = start;
  while (lo_u < 1.0 && lo_u < radii.front()) {
    double hi = std::min({lo_u * 1e4, 1.0, radii.front()});
    total.add(log_panel(lo_u, hi));
    lo_u = hi;
  }
  prev = lo_u;
  for (double R : radii) {
    total.add(span(prev, R));
    prev = R;
    out.push_back(total.value());
  }
  return out;
}

inline Verdict judge(const std::vector<ConditionLevel>& levels, double tol) {
  if (levels.size() < 2) return Verdict::inconclusive;
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i].value < levels[i - 1].value * (1.0 - 1e-12))
      return Verdict::inconclusive;
  const std::size_t n = levels.size();
  double last = levels[n - 1].value;
  double inc = last - levels[n - 2].value;
  if (!std::isfinite(last)) return Verdict::diverging;
  if (last == 0.0 || inc <= tol * std::abs(last)) return Verdict::converged;
  if (n >= 3) {
    double prev_inc = levels[n - 2].value - levels[n - 3].value;
    if (inc >= prev_inc * (1.0 - 1e-3)) return Verdict::diverging;
  }
  return Verdict::inconclusive;
}

}  // namespace detail

template <RadialKernel K>
ConditionReport check_condition(Condition which, const K& kernel,
                                const SpectralMeasureSpec& spec, double horizon,
                                const std::vector<double>& schedule,
                                const ConditionOptions& opt = {}) {
  if (schedule.empty()) throw std::invalid_argument("empty truncation schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1]))
      throw std::invalid_argument("truncation schedule must strictly increase");
  if (schedule.front() <= 0.0)
    throw std::invalid_argument("truncation radii must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  if (spec.kind == MeasureKind::table && !spec.radial && !spec.symmetric)
    throw std::invalid_argument(
        "non-radial table measure requires the symmetry flag");
  spec.validate();

  ConditionReport rep;
  rep.condition = which;
  rep.eta_radii = opt.eta_radii;
  if (rep.eta_radii.empty()) rep.eta_radii = {0.0};

  if (which == Condition::sup_modulus) {
    double v = gauss_legendre([&](double s) { return kernel.sup_sq(s); }, 0.0,
                              horizon, 4);
    for (double R : schedule) rep.levels.push_back({R, v});
    rep.constants.push_back({"integral", v});
  } else if (which == Condition::dalang) {
    auto f = [](double x) { return 1.0 / (1.0 + x * x); };
    std::vector<double> best(schedule.size(), -1.0);
    for (double eta : rep.eta_radii) {
      std::vector<double> vals;
      if (spec.kind == MeasureKind::dirac) {
        vals.assign(schedule.size(), f(eta));
      } else {
        vals = detail::radial_partials(f, spec, schedule, eta,
                                       opt.angular_nodes, 0.0);
      }
      for (std::size_t l = 0; l < vals.size(); ++l)
        best[l] = std::max(best[l], vals[l]);
    }
    for (std::size_t l = 0; l < schedule.size(); ++l)
      rep.levels.push_back({schedule[l], best[l]});
  } else {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    // Time nodes of a composite rule on [0, T].
    std::vector<double> nodes, weights;
    {
      const std::size_t panels = std::max<std::size_t>(1, opt.time_panels);
      const auto& x = Rule::abscissa();
      const auto& w = Rule::weights();
      double width = horizon / panels;
      for (std::size_t p = 0; p < panels; ++p) {
        double mid = (p + 0.5) * width;
        for (std::size_t i = 0; i < x.size(); ++i) {
          double signs[2] = {-1.0, 1.0};
          for (double sg : signs) {
            if (x[i] == 0.0 && sg > 0.0) continue;
            nodes.push_back(mid + sg * x[i] * 0.5 * width);
            weights.push_back(w[i] * 0.5 * width);
          }
        }
      }
    }
    std::vector<CompensatedSum> acc(schedule.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double s = nodes[q];
      auto f = [&](double r) {
        double v = kernel.ft(s, r);
        return v * v;
      };
      std::vector<double> best(schedule.size(), -1.0);
      for (double eta : rep.eta_radii) {
        std::vector<double> vals;
        if (spec.kind == MeasureKind::dirac) {
          vals.assign(schedule.size(), f(eta));
        } else {
          vals = detail::radial_partials(f, spec, schedule, eta,
                                         opt.angular_nodes,
                                         0.25 / std::max(s, 1e-12));
        }
        for (std::size_t l = 0; l < vals.size(); ++l)
          best[l] = std::max(best[l], vals[l]);
      }
      for (std::size_t l = 0; l < schedule.size(); ++l)
        acc[l].add(weights[q] * best[l]);
    }
    for (std::size_t l = 0; l < schedule.size(); ++l)
      rep.levels.push_back({schedule[l], acc[l].value()});
  }

  rep.verdict = detail::judge(rep.levels, opt.tolerance);
  if (rep.levels.size() >= 2) {
    const std::size_t n = rep.levels.size();
    double inc = rep.levels[n - 1].value - rep.levels[n - 2].value;
    rep.constants.push_back(
        {"relative_increment",
         rep.levels[n - 1].value == 0.0 ? 0.0
                                        : inc / std::abs(rep.levels[n - 1].value)});
  }
  rep.constants.push_back({"final_value", rep.levels.back().value});
  return rep;
}

// ------------------------------------------------------ time-averaged sandwich

struct SandwichResult {
  double c1 = 0.0;
  double c2 = 0.0;
  // Same bounds for the instantaneous ratio sin^2(2 pi t r)/(4 pi^2 r^2);
  // the lower one is zero whenever the grid hits a zero of the sine.
  double pointwise_c1 = 0.0;
  double pointwise_c2 = 0.0;
  bool passed = false;
};

// Tightest constants with C1/(1+r^2) <= (1/t) int_0^t sin^2(2 pi s r) /
// (4 pi^2 r^2) ds <= C2/(1+r^2) over the grid.
inline SandwichResult time_averaged_sandwich(double horizon, const std::vector<double>& t_grid,
                                  const std::vector<double>& r_grid) {
  if (t_grid.empty() || r_grid.empty())
    throw std::invalid_argument("sandwich grids must be nonempty");
  SandwichResult out;
  out.c1 = out.pointwise_c1 = std::numeric_limits<double>::infinity();
  out.c2 = out.pointwise_c2 = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw std::invalid_argument("sandwich t grid must exclude 0");
    if (t > horizon * (1.0 + 1e-12))
      throw std::invalid_argument("sandwich t grid exceeds the horizon");
    for (double r : r_grid) {
      if (r < 0.0) throw std::invalid_argument("sandwich radii must be >= 0");
      double avg = wave_sq_time_integral(t, r) / t;
      double q = avg * (1.0 + r * r);
      out.c1 = std::min(out.c1, q);
      out.c2 = std::max(out.c2, q);
      double v = eval_wave_ft(t, r);
      double p = v * v * (1.0 + r * r);
      out.pointwise_c1 = std::min(out.pointwise_c1, p);
      out.pointwise_c2 = std::max(out.pointwise_c2, p);
    }
  }
  out.passed = out.c1 > 0.0 && std::isfinite(out.c2);
  return out;
}

// ------------------------------------------------------- inf over eta

// inf over |eta| <= R of |FG(s)(xi + eta)|^2.  |xi + eta| sweeps
// [max(0, |xi| - R), |xi| + R]; the squared kernel vanishes at the radii
// n / (2 s) and is unimodal between consecutive zeros, so the infimum is
// 0 when a zero is inside and an endpoint value otherwise.
inline std::vector<double> inf_eta_demo(double s, double xi_norm,
                                        const std::vector<double>& radii) {
  if (!(s > 0.0)) throw std::invalid_argument("inf_eta_demo needs s > 0");
  if (xi_norm < 0.0) throw std::invalid_argument("|xi| must be >= 0");
  std::vector<double> out;
  for (double R : radii) {
    if (R < 0.0) throw std::invalid_argument("radius must be >= 0");
    double lo = std::max(0.0, xi_norm - R);
    double hi = xi_norm + R;
    double first_zero_index = std::ceil(2.0 * s * lo);
    if (first_zero_index < 1.0) first_zero_index = 1.0;
    if (first_zero_index / (2.0 * s) <= hi) {
      out.push_back(0.0);
      continue;
    }
    double a = eval_wave_ft(s, lo), b = eval_wave_ft(s, hi);
    out.push_back(std::min(a * a, b * b));
  }
  return out;
}

inline std::vector<double> inf_eta_demo(double s, const std::vector<double>& xi,
                                        const std::vector<double>& radii) {
  double r2 = 0.0;
  for (double v : xi) r2 += v * v;
  return inf_eta_demo(s, std::sqrt(r2), radii);
}

}  // namespace swave
