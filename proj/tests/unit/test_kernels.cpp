#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "swave/kernels/conditions.hpp"

using namespace swave;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(WaveKernel, RemovableSingularity) {
  EXPECT_DOUBLE_EQ(eval_wave_ft(0.5, 0.0), 0.5);
  EXPECT_NEAR(eval_wave_ft(0.5, 1e-12), 0.5, 1e-15);
}

TEST(WaveKernel, QuarterPeriod) {
  EXPECT_NEAR(eval_wave_ft(0.25, 1.0), 0.15915494309189535, 1e-15);
}

TEST(WaveKernel, ZeroTime) { EXPECT_EQ(eval_wave_ft(0.0, 3.7), 0.0); }

TEST(WaveKernel, RejectsNegativeInputs) {
  EXPECT_THROW(eval_wave_ft(-1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(eval_wave_ft(1.0, -1.0), std::invalid_argument);
}

TEST(WaveKernel, SquareBoundedByBothEnvelopes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.0, 5.0), ur(0.0, 20.0);
  for (int i = 0; i < 20000; ++i) {
    double t = ut(rng), r = i % 7 == 0 ? ur(rng) * 1e-6 : ur(rng);
    double v = eval_wave_ft(t, r);
    double env = r == 0.0 ? t * t : std::min(t * t, 1.0 / (4 * kPi * kPi * r * r));
    EXPECT_LE(v * v, env * (1.0 + 1e-12));
  }
}

TEST(WaveKernel, SeriesBranchIsContinuous) {
  // Just below and above the switch to the closed form.
  double t = 1.0;
  double r_switch = 1e-4 / (2 * kPi * t);
  double a = eval_wave_ft(t, r_switch * (1 - 1e-9));
  double b = eval_wave_ft(t, r_switch * (1 + 1e-9));
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(J2, WaveKernelIsSquare) {
  WaveKernel w;
  EXPECT_DOUBLE_EQ(j2(0.7, w), 0.49);
  EXPECT_EQ(j2(0.0, w), 0.0);
  EXPECT_DOUBLE_EQ(j2(3.0, ConstantKernel{2.5}), 6.25);
}

TEST(Mollifier, BoundedAndMonotoneInIndex) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (auto kind : {MollifierKind::band_limit, MollifierKind::gaussian,
                    MollifierKind::fejer}) {
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> xi = {u(rng), u(rng), u(rng)};
      double prev = -1.0;
      for (int n = 1; n <= 256; n *= 2) {
        double v = Mollifier(kind, n)(xi);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_GE(v, prev);
        prev = v;
      }
      EXPECT_GT(prev, 0.9);
    }
  }
}

TEST(J1, DiracEqualsJ2) {
  auto g = build_grid(3, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::dirac(3), g);
  WaveKernel w;
  for (double s : {0.0, 0.1, 0.5, 1.0, 2.3})
    EXPECT_EQ(j1(s, w, m).value, j2(s, w));
}

TEST(J1, BoundedByMassTimesSquare) {
  auto g = build_grid(2, 1.0, 3);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.2), g);
  for (double s : {0.1, 0.7, 1.5})
    EXPECT_LE(j1(s, WaveKernel{}, m).value, s * s * m.total_mass() * (1 + 1e-12));
}

TEST(J1, MatchesExhaustiveEnumeration) {
  const int d = 4, K = 8;
  auto g = build_grid(d, 1.0, K);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(d, 1.5), g);
  EtaSearch search;  // box spacing 0.5, half width 1, 8 heaviest atoms
  // Candidate list built independently of the library.
  std::vector<std::vector<double>> etas;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c)
        for (int e = -1; e <= 1; ++e)
          etas.push_back({0.5 * a, 0.5 * b, 0.5 * c, 0.5 * e});
  std::vector<std::pair<double, std::size_t>> heavy;
  for (std::size_t k = 0; k < g.size(); ++k) heavy.push_back({m.weights[k], k});
  std::stable_sort(heavy.begin(), heavy.end(),
                   [](auto& x, auto& y) { return x.first > y.first; });
  for (int i = 0; i < 8; ++i) {
    auto kv = g.mode_vector(heavy[i].second);
    etas.push_back({-double(kv[0]), -double(kv[1]), -double(kv[2]), -double(kv[3])});
  }
  double best = 0.0;
  for (const auto& eta : etas) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < g.size(); ++k) {
      auto kv = g.mode_vector(k);
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (kv[a] + eta[a]) * (kv[a] + eta[a]);
      double r = std::sqrt(r2);
      double v = r == 0.0 ? 1.0 : std::sin(2 * kPi * r) / (2 * kPi * r);
      acc += m.weights[k] * v * v;
    }
    best = std::max(best, double(acc));
  }
  auto res = j1(1.0, WaveKernel{}, m, search);
  EXPECT_NEAR(res.value, best, 1e-9 * best);
  EXPECT_FALSE(res.search.empty());
}

TEST(J1, TorusVersionDominatesUnshiftedSum) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  double s = 0.6;
  double unshifted = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double v = eval_wave_ft(s, g.radius(k));
    unshifted += m.weights[k] * v * v;
  }
  EXPECT_GE(j1_torus(s, WaveKernel{}, m), unshifted * (1 - 1e-14));
}

TEST(Conditions, SupModulusIsCubeOverThree) {
  for (double T : {1.0, 0.5, 2.0}) {
    auto rep = check_condition(Condition::sup_modulus, WaveKernel{},
                               SpectralMeasureSpec::riesz(4, 1.5), T,
                               {10.0, 100.0});
    EXPECT_NEAR(rep.levels.back().value, T * T * T / 3.0, 1e-10);
    EXPECT_EQ(rep.verdict, Verdict::converged);
  }
}

TEST(Conditions, ShiftedEnergyWithDiracIsCubeOverThree) {
  auto rep = check_condition(Condition::shifted_energy, WaveKernel{},
                             SpectralMeasureSpec::dirac(2), 1.0, {1.0, 2.0});
  EXPECT_NEAR(rep.levels.back().value, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.verdict, Verdict::converged);
}

TEST(Conditions, RieszPartialsMatchIncompleteBeta) {
  for (int d : {3, 4, 5}) {
    for (double beta : {0.5, 1.0, 1.5, 1.9}) {
      auto spec = SpectralMeasureSpec::riesz(d, beta);
      std::vector<double> radii = {1.0, 10.0, 1e3};
      auto rep = check_condition(Condition::dalang, WaveKernel{}, spec, 1.0, radii);
      double scale = riesz_constant(d, beta) * sphere_area(d);
      for (std::size_t l = 0; l < radii.size(); ++l) {
        double R = radii[l];
        double x = R * R / (1 + R * R);
        double oracle =
            scale * 0.5 * boost::math::beta(beta / 2, 1 - beta / 2, x);
        EXPECT_NEAR(rep.levels[l].value, oracle, 1e-8 * oracle)
            << "d=" << d << " beta=" << beta << " R=" << R;
      }
    }
  }
}

TEST(Conditions, RieszVerdictTracksBetaBelowTwo) {
  for (int d : {3, 4, 5}) {
    for (double beta : {0.5, 1.0, 1.5, 1.9, 2.1, 2.5}) {
      auto rep = check_condition(Condition::dalang, WaveKernel{},
                                 SpectralMeasureSpec::riesz(d, beta), 1.0,
                                 decade_schedule(1, 60));
      Verdict want = beta < 2.0 ? Verdict::converged : Verdict::diverging;
      EXPECT_EQ(rep.verdict, want) << "d=" << d << " beta=" << beta;
    }
  }
}

TEST(Conditions, DivergentPartialsGrowLikePower) {
  double beta = 2.5;
  auto rep = check_condition(Condition::dalang, WaveKernel{},
                             SpectralMeasureSpec::riesz(4, beta), 1.0,
                             {1e4, 1e5, 1e6});
  double inc1 = rep.levels[1].value - rep.levels[0].value;
  double inc2 = rep.levels[2].value - rep.levels[1].value;
  EXPECT_NEAR(inc2 / inc1, std::pow(10.0, beta - 2), 1e-3);
}

TEST(Conditions, EtaSearchDoesNotBeatOriginForRiesz) {
  ConditionOptions opt;
  opt.eta_radii = {0.0, 0.5, 1.0, 2.0};
  auto with = check_condition(Condition::dalang, WaveKernel{},
                              SpectralMeasureSpec::riesz(3, 1.0), 1.0,
                              {10.0, 100.0}, opt);
  auto without = check_condition(Condition::dalang, WaveKernel{},
                                 SpectralMeasureSpec::riesz(3, 1.0), 1.0,
                                 {10.0, 100.0});
  EXPECT_NEAR(with.levels.back().value, without.levels.back().value,
              1e-10 * without.levels.back().value);
}

TEST(Conditions, RejectsBadSchedulesAndAsymmetricTables) {
  auto spec = SpectralMeasureSpec::riesz(3, 1.0);
  EXPECT_THROW(check_condition(Condition::dalang, WaveKernel{}, spec, 1.0, {10.0, 5.0}),
               std::invalid_argument);
  auto table = SpectralMeasureSpec::table(3, {0.0, 1.0}, {1.0, 0.5});
  table.radial = false;
  table.symmetric = false;
  EXPECT_THROW(check_condition(Condition::dalang, WaveKernel{}, table, 1.0, {1.0, 2.0}),
               std::invalid_argument);
}

TEST(JDelta, SingleAtomIsCubeOverThree) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::dirac(2), g);
  for (double delta : {0.1, 0.5, 1.0})
    EXPECT_NEAR(j_delta(delta, WaveKernel{}, m), delta * delta * delta / 3, 1e-15);
}

TEST(JDelta, LinearInTheMeasure) {
  auto g = build_grid(2, 1.0, 3);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 0.8), g);
  double base = j_delta(0.7, WaveKernel{}, m);
  EXPECT_NEAR(j_delta(0.7, WaveKernel{}, m.scaled(3.5)), 3.5 * base, 1e-13 * base);
}

TEST(JDelta, MatchesRefinedBruteForce) {
  auto g = build_grid(4, 1.0, 8);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(4, 1.5), g);
  const double delta = 0.5;
  auto brute = [&](int nodes) {
    long double acc = 0.0L;
    double h = delta / nodes;
    for (int q = 0; q < nodes; ++q) {
      double s = (q + 0.5) * h;
      for (std::size_t k = 0; k < g.size(); ++k) {
        double r = g.radius(k);
        double v = r == 0.0 ? s : std::sin(2 * kPi * s * r) / (2 * kPi * r);
        acc += m.weights[k] * v * v * h;
      }
    }
    return double(acc);
  };
  double coarse = brute(40), fine = brute(80);
  double value = j_delta(delta, WaveKernel{}, m);
  EXPECT_NEAR(value, fine, 0.01 * fine);
  EXPECT_LE(std::abs(value - fine), std::abs(value - coarse));
}

TEST(JDelta, MidpointRuleAgreesWithExact) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  double exact = j_delta(1.0, WaveKernel{}, m);
  double mid = j_delta(1.0, WaveKernel{}, m, Mollifier::identity(),
                       TimeRule::midpoint(4096));
  EXPECT_NEAR(mid, exact, 1e-6 * exact);
}

TEST(JDelta, MonotoneAndDominatedByJbar) {
  auto g = build_grid(3, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(3, 1.5), g);
  double mass = m.total_mass();
  double prev_j = 0.0, prev_bar = 0.0;
  for (double delta = 0.05; delta <= 1.0; delta += 0.05) {
    double jd = j_delta(delta, WaveKernel{}, m);
    double jb = jbar_delta(delta, WaveKernel{});
    EXPECT_GE(jd, prev_j);
    EXPECT_GE(jb, prev_bar);
    EXPECT_LE(jd, mass * jb * (1 + 1e-12));
    EXPECT_GE(jb, jd / mass * (1 - 1e-12));
    prev_j = jd;
    prev_bar = jb;
  }
}

TEST(JBar, CubicScaling) {
  EXPECT_NEAR(jbar_delta(0.6, WaveKernel{}), 0.072, 1e-15);
  EXPECT_NEAR(jbar_delta(0.3, WaveKernel{}) * 8, jbar_delta(0.6, WaveKernel{}),
              1e-15);
  EXPECT_THROW(jbar_delta(0.0, WaveKernel{}), std::invalid_argument);
  EXPECT_THROW(j_delta(-1.0, WaveKernel{},
                       discretize_measure(SpectralMeasureSpec::dirac(1),
                                          build_grid(1, 1.0, 0))),
               std::invalid_argument);
}

TEST(Sandwich, TimeAveragedConstantsExist) {
  std::vector<double> ts, rs = {0.0};
  for (int i = 1; i <= 20; ++i) ts.push_back(0.05 * i);
  for (double r = 0.01; r < 200.0; r *= 1.2) rs.push_back(r);
  auto res = time_averaged_sandwich(1.0, ts, rs);
  EXPECT_TRUE(res.passed);
  EXPECT_GT(res.c1, 0.0);
  EXPECT_TRUE(std::isfinite(res.c2));
  for (double t : ts) {
    double at_zero = t * t / 3.0;
    EXPECT_GE(at_zero, res.c1 * (1 - 1e-12));
    EXPECT_LE(at_zero, res.c2 * (1 + 1e-12));
  }
}

TEST(Sandwich, AverageBelowEnvelope) {
  for (double t : {0.1, 0.5, 1.0})
    for (double r = 0.05; r < 100; r *= 1.7)
      EXPECT_LE(wave_sq_time_integral(t, r) / t,
                1.0 / (4 * kPi * kPi * r * r) * (1 + 1e-12));
}

TEST(Sandwich, SameForRadiiFromAnyDimension) {
  // Radii of lattice vectors in d=4 and d=9 with equal norms.
  std::vector<double> r4 = {std::sqrt(4.0), std::sqrt(1.0 + 1 + 1 + 1)};
  std::vector<double> r9 = {std::sqrt(9.0 - 5.0), std::sqrt(4.0)};
  auto a = time_averaged_sandwich(1.0, {0.5, 1.0}, r4);
  auto b = time_averaged_sandwich(1.0, {0.5, 1.0}, r9);
  EXPECT_EQ(a.c1, b.c1);
  EXPECT_EQ(a.c2, b.c2);
}

TEST(Sandwich, PointwiseLowerBoundFailsAtSineZeros) {
  // t r = 1/2 puts sin(2 pi t r) at zero.
  auto res = time_averaged_sandwich(1.0, {1.0}, {0.5, 1.0});
  EXPECT_LT(res.pointwise_c1, 1e-30);
  EXPECT_GT(res.c1, 0.0);
}

TEST(Sandwich, RejectsZeroTime) {
  EXPECT_THROW(time_averaged_sandwich(1.0, {0.0, 0.5}, {1.0}), std::invalid_argument);
}

TEST(InfEta, SingletonAtZeroRadius) {
  auto v = inf_eta_demo(0.3, 0.7, {0.0});
  double f = eval_wave_ft(0.3, 0.7);
  EXPECT_DOUBLE_EQ(v[0], f * f);
}

TEST(InfEta, NonIncreasingAndHitsZero) {
  const double s = 0.4, xi = 0.2;
  std::vector<double> radii;
  for (double R = 0.0; R < 3.0; R += 0.05) radii.push_back(R);
  auto v = inf_eta_demo(s, xi, radii);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i], v[i - 1]);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (radii[i] >= 1.0 / (2 * s) + xi) EXPECT_EQ(v[i], 0.0);
  EXPECT_GT(v.front(), 0.0);
}
