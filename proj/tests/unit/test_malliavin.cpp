#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "swave/integrals/integrals.hpp"
#include "swave/malliavin/checks.hpp"

using namespace swave;

namespace {

struct Setup {
  TorusGrid grid;
  DiscreteSpectralMeasure measure;
  TimeGrid time;
};

Setup riesz_setup(int d, int K, std::size_t steps, double horizon = 1.0) {
  auto g = build_grid(d, 1.0, K);
  double beta = d == 1 ? 0.5 : 1.5;
  return {g, discretize_measure(SpectralMeasureSpec::riesz(d, beta), g),
          TimeGrid(steps, horizon)};
}

Coefficients coeffs(Coefficient sigma, Coefficient drift = Coefficient::zero()) {
  Coefficients c;
  c.sigma = std::move(sigma);
  c.drift = std::move(drift);
  return c;
}

ShiftDirection smooth_direction(const ConsBasis& basis, const TimeGrid& time) {
  ShiftDirection h(time.steps, basis.size(), time.dt);
  for (std::size_t j = 0; j < time.steps; ++j)
    for (std::size_t i = 0; i < basis.size(); ++i)
      h.at(j, i) = std::cos(0.3 * j + 1.1 * i) / (1.0 + i);
  return h;
}

// y'' = a y + c over a segment of length tau, exactly.
void propagate(std::complex<double>& y, std::complex<double>& dy, double a,
               std::complex<double> c, double tau) {
  std::complex<double> y1, dy1;
  if (a < 0) {
    double nu = std::sqrt(-a), cs = std::cos(nu * tau), sn = std::sin(nu * tau);
    y1 = y * cs + dy / nu * sn + c / (nu * nu) * (1.0 - cs);
    dy1 = -y * nu * sn + dy * cs + c / nu * sn;
  } else if (a > 0) {
    double mu = std::sqrt(a), ch = std::cosh(mu * tau), sh = std::sinh(mu * tau);
    y1 = y * ch + dy / mu * sh + c / (mu * mu) * (ch - 1.0);
    dy1 = y * mu * sh + dy * ch + c / mu * sh;
  } else {
    y1 = y + dy * tau + 0.5 * c * tau * tau;
    dy1 = dy + c * tau;
  }
  y = y1;
  dy = dy1;
}

}  // namespace

TEST(Malliavin, AdjointMatchesForwardTangents) {
  auto s = riesz_setup(1, 2, 8);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto co = coeffs(Coefficient::sine(1.3), Coefficient::cosine(0.8));
  auto noise = sample_increments(s.measure, s.time, {1, 0});
  auto u = solve_mild(cfg, co, noise);
  Target target{8, 2};
  auto adj = solve_derivative_full(cfg, co, noise, u, basis, target);
  auto fwd = derivative_by_directions(cfg, co, noise, u, basis, target);
  double scale = 0.0;
  for (double c : fwd.field.coeff) scale = std::max(scale, std::abs(c));
  ASSERT_GT(scale, 1e-3);
  for (std::size_t n = 0; n < adj.field.coeff.size(); ++n)
    EXPECT_NEAR(adj.field.coeff[n], fwd.field.coeff[n], 1e-10 * scale);
  EXPECT_NEAR(adj.norm_sq(), fwd.norm_sq(), 1e-10 * fwd.norm_sq());
  // Pairing with any direction is the forward tangent.
  auto h = smooth_direction(basis, s.time);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, h);
  EXPECT_NEAR(adj.pair(h), d.at(8, 2), 1e-10 * std::max(1.0, std::abs(d.at(8, 2))));
}

TEST(Malliavin, AdditiveNormIsMidpointJ) {
  auto s = riesz_setup(2, 2, 16);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  const double sigma = 1.7;
  auto co = coeffs(Coefficient::constant(sigma));
  double oracle =
      sigma * sigma * j_delta(1.0, WaveKernel{}, s.measure, Mollifier{}, TimeRule::midpoint(16));
  double first = 0.0;
  for (std::uint64_t r = 0; r < 3; ++r) {
    auto noise = sample_increments(s.measure, s.time, {2, r});
    auto u = solve_mild(cfg, co, noise);
    double norm = solve_derivative_full(cfg, co, noise, u, basis, {16, 7}).norm_sq();
    EXPECT_NEAR(norm, oracle, 1e-10 * oracle);
    if (r == 0) first = norm;
    EXPECT_EQ(norm, first);
  }
  // Scaling sigma scales the norm.
  auto noise = sample_increments(s.measure, s.time, {2, 0});
  auto co2 = coeffs(Coefficient::constant(-2.0 * sigma));
  auto u2 = solve_mild(cfg, co2, noise);
  EXPECT_NEAR(solve_derivative_full(cfg, co2, noise, u2, basis, {16, 7}).norm_sq(),
              4.0 * oracle, 1e-10 * oracle);
}

TEST(Malliavin, AdditiveDirectionalIsKernelPairing) {
  auto s = riesz_setup(2, 2, 10);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  const double sigma = 0.9;
  auto co = coeffs(Coefficient::constant(sigma));
  auto noise = sample_increments(s.measure, s.time, {3, 0});
  auto u = solve_mild(cfg, co, noise);
  auto h = smooth_direction(basis, s.time);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, h);
  // Oracle: sigma sum_j dt sum_i h_{j,i} <G(t - s_j, x - *), e_i>_H.
  Target target{10, 11};
  auto one = constant_integrand(s.grid, s.time, 1.0);
  auto phi = kernel_integrand(WaveKernel{}, Mollifier{}, one, s.grid, s.time, target);
  double oracle = 0.0;
  for (std::size_t j = 0; j < 10; ++j) {
    auto c = basis.project(phi.row(j));
    for (std::size_t i = 0; i < basis.size(); ++i) oracle += sigma * s.time.dt * h.at(j, i) * c[i];
  }
  EXPECT_NEAR(d.at(10, 11), oracle, 1e-11 * std::max(1.0, std::abs(oracle)));
}

TEST(Malliavin, CausalInDirectionAndTarget) {
  auto s = riesz_setup(1, 2, 10);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto co = coeffs(Coefficient::cosine(1.0), Coefficient::sine(1.0));
  auto noise = sample_increments(s.measure, s.time, {4, 0});
  auto u = solve_mild(cfg, co, noise);
  std::vector<double> phi(s.grid.size(), 1.0);
  auto late = window_direction(basis, s.time, 6, 10, phi);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, late);
  for (std::size_t i = 0; i <= 6; ++i)
    for (std::size_t m = 0; m < s.grid.size(); ++m) EXPECT_EQ(d.at(i, m), 0.0);
  auto du = solve_derivative_full(cfg, co, noise, u, basis, {6, 1});
  for (std::size_t j = 6; j < 10; ++j)
    for (std::size_t i = 0; i < basis.size(); ++i) EXPECT_EQ(du.coefficient(j, i), 0.0);
  EXPECT_GT(du.norm_sq(), 0.0);
}

TEST(Malliavin, LinearDriftDerivativeIsExactShift) {
  // sigma constant, b linear: u is affine in the noise, so the shift by h
  // moves u by exactly D^h u.
  auto s = riesz_setup(2, 2, 12);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  cfg.shifted_all_terms = true;
  auto co = coeffs(Coefficient::constant(1.2), Coefficient::linear(-3.0));
  auto noise = sample_increments(s.measure, s.time, {5, 0});
  auto u = solve_mild(cfg, co, noise);
  auto h = smooth_direction(basis, s.time);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, h);
  auto uh = solve_shifted(cfg, co, noise, basis, h);
  for (std::size_t n = 0; n < u.values.size(); ++n)
    EXPECT_NEAR(uh.values[n] - u.values[n], d.values[n], 1e-10);
}

TEST(Malliavin, LinearDriftMatchesVolterraResolvent) {
  // Mode by mode D^h u solves y'' = (lambda - w^2) y + sigma F(Rh)(s) from rest,
  // integrated exactly over the piecewise constant forcing.
  auto g = build_grid(1, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(1, 0.5), g);
  TimeGrid tg(200, 1.0);
  ConsBasis basis(m);
  auto cfg = make_solver_config(m, tg);
  const double sigma = 1.0, lambda = 2.5;
  auto co = coeffs(Coefficient::constant(sigma), Coefficient::linear(lambda));
  auto noise = sample_increments(m, tg, {6, 0});
  auto u = solve_mild(cfg, co, noise);
  std::vector<double> bump(g.size(), 0.0);
  bump[1] = 1.0;
  auto h = window_direction(basis, tg, 20, 120, bump);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, h);

  const std::size_t M = g.size();
  Fft fft(g);
  std::vector<std::complex<double>> y(M, 0.0), dy(M, 0.0), force(M);
  for (std::size_t j = 0; j < tg.steps; ++j) {
    auto rep = basis.field_from_coefficients(h.row(j));
    fft.forward_real(rep, force);
    for (std::size_t k = 0; k < M; ++k) {
      double w = 2.0 * std::numbers::pi * g.radius(k);
      propagate(y[k], dy[k], lambda - w * w, sigma * force[k], tg.dt);
    }
  }
  std::vector<double> oracle(M);
  fft.inverse_to_real(y, oracle);
  double scale = 0.0;
  for (double v : oracle) scale = std::max(scale, std::abs(v));
  ASSERT_GT(scale, 1e-3);
  for (std::size_t x = 0; x < M; ++x)
    EXPECT_LT(std::abs(d.at(tg.steps, x) - oracle[x]), 1e-3 * scale) << x;
}

TEST(Malliavin, BandLimitAndZeroCases) {
  auto s = riesz_setup(2, 2, 8);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto co = coeffs(Coefficient::cosine(1.0), Coefficient::sine(1.0));
  auto noise = sample_increments(s.measure, s.time, {7, 0});
  auto u = solve_mild(cfg, co, noise);
  auto du = solve_derivative_full(cfg, co, noise, u, basis, {8, 3});
  Mollifier full(MollifierKind::band_limit, 2);
  auto un = solve_mollified(cfg, co, noise, full);
  EXPECT_EQ(solve_derivative_mollified(cfg, co, noise, un, full, basis, {8, 3}).field.coeff,
            du.field.coeff);
  auto zero = coeffs(Coefficient::zero());
  auto u0 = solve_mild(cfg, zero, noise);
  EXPECT_EQ(solve_derivative_full(cfg, zero, noise, u0, basis, {8, 3}).norm_sq(), 0.0);
}

TEST(Malliavin, ChainRuleAgreesWithForwardTangent) {
  auto s = riesz_setup(1, 2, 8);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto co = coeffs(Coefficient::constant(1.0), Coefficient::sine(1.0));
  auto noise = sample_increments(s.measure, s.time, {8, 0});
  auto u = solve_mild(cfg, co, noise);
  auto h = smooth_direction(basis, s.time);
  auto d = solve_derivative_directional(cfg, co, noise, u, basis, h);
  auto du = solve_derivative_full(cfg, co, noise, u, basis, {8, 4});
  auto dbu = chain_rule(du, Coefficient::sine(), u.at(8, 4));
  EXPECT_NEAR(dbu.pair(h), std::cos(u.at(8, 4)) * d.at(8, 4), 1e-10);
}

TEST(FdCheck, AdditiveLinearIsExact) {
  auto s = riesz_setup(2, 2, 10);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto noise = sample_increments(s.measure, s.time, {9, 0});
  auto h = smooth_direction(basis, s.time);
  auto rep = fd_check(cfg, coeffs(Coefficient::constant(1.0)), noise, basis, h, {10, 5});
  EXPECT_TRUE(rep.verbatim.exact) << rep.verbatim.max_error;
  EXPECT_TRUE(rep.all_terms.exact) << rep.all_terms.max_error;
  EXPECT_EQ(rep.validating(), "both");
  auto lin = fd_check(cfg, coeffs(Coefficient::constant(1.0), Coefficient::linear(0.7)), noise,
                      basis, h, {10, 5});
  EXPECT_TRUE(lin.all_terms.exact) << lin.all_terms.max_error;
}

TEST(FdCheck, ZeroDirectionHasZeroError) {
  auto s = riesz_setup(1, 2, 6);
  ConsBasis basis(s.measure);
  auto noise = sample_increments(s.measure, s.time, {10, 0});
  auto rep = fd_check(make_solver_config(s.measure, s.time),
                      coeffs(Coefficient::sine(1.0), Coefficient::sine(1.0)), noise, basis,
                      zero_direction(basis, s.time), {6, 0});
  for (double e : rep.all_terms.errors) EXPECT_EQ(e, 0.0);
  for (double e : rep.verbatim.errors) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(rep.derivative, 0.0);
}

TEST(FdCheck, SineDriftFirstOrderUnderAllTerms) {
  auto s = riesz_setup(2, 2, 16);
  ConsBasis basis(s.measure);
  auto noise = sample_increments(s.measure, s.time, {11, 0});
  auto h = random_unit_direction(basis, s.time, 11, 0).scaled(5.0);
  auto rep = fd_check(make_solver_config(s.measure, s.time),
                      coeffs(Coefficient::constant(1.0), Coefficient::sine(1.0)), noise, basis, h,
                      {16, 0});
  EXPECT_GE(rep.all_terms.slope, 0.8);
  EXPECT_LE(rep.all_terms.slope, 1.2);
  EXPECT_TRUE(rep.all_terms.valid);
  // The verbatim equation has no drift feedback in its h-derivative.
  EXPECT_FALSE(rep.verbatim.valid);
}

TEST(FdCheck, ScheduleAndSlopeHelpers) {
  auto e = epsilon_schedule();
  ASSERT_EQ(e.size(), 13u);
  EXPECT_DOUBLE_EQ(e.front(), 1e-1);
  EXPECT_NEAR(e.back(), 1e-4, 1e-18);
  std::vector<double> err;
  for (double v : e) err.push_back(3.0 * v * v);
  EXPECT_NEAR(log_slope(e, err, 1e-4, 1e-1), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(log_slope(e, err, 1.0, 2.0)));
  EXPECT_THROW(epsilon_schedule(1e-4, 1e-1), std::invalid_argument);
}

TEST(Nondegeneracy, AdditiveCaseIsDeterministic) {
  auto s = riesz_setup(2, 2, 16);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  const double sigma = 1.0;
  auto rep = nondegeneracy(cfg, coeffs(Coefficient::constant(sigma)), basis, {16, 0},
                           {0.5, 0.25, 0.125, 0.0625}, {1, 20, 1});
  EXPECT_NEAR(rep.norm_sq.mean(), sigma * sigma * rep.j_total, 1e-10 * rep.j_total);
  EXPECT_NEAR(rep.norm_sq_min, sigma * sigma * rep.j_total, 1e-10 * rep.j_total);
  EXPECT_NEAR(rep.norm_sq_max, sigma * sigma * rep.j_total, 1e-10 * rep.j_total);
  for (const auto& lv : rep.levels) {
    EXPECT_LT(lv.remainder.mean(), 1e-25);
    EXPECT_EQ(lv.small.mean(), 0.0);
    EXPECT_EQ(lv.bound_violations, 0u);
    EXPECT_NEAR(lv.jbar, std::pow(lv.delta, 3) / 3.0, 1e-14);
  }
  EXPECT_TRUE(rep.probability_vanishes());
}

TEST(Nondegeneracy, SineDriftRemainderScales) {
  auto s = riesz_setup(1, 2, 16);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto rep = nondegeneracy(cfg, coeffs(Coefficient::constant(1.0), Coefficient::sine(1.0)),
                           basis, {16, 0}, {0.5, 0.25, 0.125, 0.0625}, {2, 300, 1});
  EXPECT_TRUE(rep.ratio_bounded());
  EXPECT_TRUE(rep.probability_vanishes());
  for (const auto& lv : rep.levels) {
    // Feedback needs at least two steps inside the window to show up.
    if (lv.window > 1) EXPECT_GT(lv.remainder.mean(), 0.0);
    else EXPECT_EQ(lv.remainder.mean(), 0.0);
    EXPECT_EQ(lv.bound_violations, 0u);
  }
}

TEST(Nondegeneracy, RejectsBadInputs) {
  auto s = riesz_setup(1, 1, 8);
  ConsBasis basis(s.measure);
  auto cfg = make_solver_config(s.measure, s.time);
  auto additive = coeffs(Coefficient::constant(1.0));
  EXPECT_THROW(nondegeneracy(cfg, additive, basis, {4, 0}, {0.75}, {1, 10, 1}),
               std::invalid_argument);
  EXPECT_THROW(nondegeneracy(cfg, additive, basis, {8, 0}, {0.1}, {1, 10, 1}),
               std::invalid_argument);
  EXPECT_THROW(nondegeneracy(cfg, coeffs(Coefficient::sine(1.0)), basis, {8, 0}, {0.5},
                             {1, 10, 1}),
               std::invalid_argument);
}

TEST(DerivativeStationarity, AdditiveIdentityIsExact) {
  auto s = riesz_setup(1, 2, 6);
  ConsBasis basis(s.measure);
  auto rep = stationarity_check_DBu(make_solver_config(s.measure, s.time),
                                    coeffs(Coefficient::constant(1.0)), basis, 6,
                                    Coefficient::linear(1.0), {1, 5, 1});
  EXPECT_TRUE(rep.report.passed);
  EXPECT_EQ(rep.report.worst_z, 0.0);
  EXPECT_EQ(rep.max_slope, 1.0);
}

TEST(DerivativeStationarity, SineTransformPasses) {
  auto s = riesz_setup(1, 2, 8);
  ConsBasis basis(s.measure);
  auto rep = stationarity_check_DBu(make_solver_config(s.measure, s.time),
                                    coeffs(Coefficient::cosine(1.0), Coefficient::sine(1.0)),
                                    basis, 8, Coefficient::sine(), {3, 400, 1});
  EXPECT_TRUE(rep.report.passed) << rep.report.worst_z << " > " << rep.report.critical_z;
  EXPECT_LE(rep.max_slope, 1.0);
}

TEST(DerivativeMoments, BoundedOverGaussianSchedule) {
  auto s = riesz_setup(1, 2, 8);
  ConsBasis basis(s.measure);
  std::vector<Mollifier> sched;
  for (int n : {2, 4, 8, 16}) sched.emplace_back(MollifierKind::gaussian, n);
  auto rep = derivative_moment_report(make_solver_config(s.measure, s.time),
                                      coeffs(Coefficient::constant(1.0), Coefficient::sine(1.0)),
                                      basis, {8, 0}, sched, {4, 200, 1});
  EXPECT_TRUE(rep.bounded);
  for (const auto& l : rep.levels) EXPECT_GT(l.value, 0.0);
}
