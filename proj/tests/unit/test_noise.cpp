#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "swave/core/stats.hpp"
#include "swave/noise/hilbert.hpp"

using namespace swave;

namespace {

std::vector<double> random_field(const TorusGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> f(g.size());
  for (auto& v : f) v = nd(rng);
  return f;
}

}  // namespace

TEST(Measure, LebesgueIsUniform) {
  auto g = build_grid(2, 2.0, 3);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(2), g);
  for (double w : m.weights) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(Measure, DiracSingleAtom) {
  auto g = build_grid(3, 1.0, 1);
  auto m = discretize_measure(SpectralMeasureSpec::dirac(3), g);
  EXPECT_EQ(m.weights[0], 1.0);
  EXPECT_EQ(m.positive_count(), 1u);
}

TEST(Measure, RieszSymmetric) {
  auto g = build_grid(3, 1.3, 3);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(3, 1.5), g);
  for (std::size_t k = 0; k < g.size(); ++k)
    EXPECT_EQ(m.weights[k], m.weights[g.pair(k)]);
}

TEST(Measure, RieszRejectsBetaOutOfRange) {
  EXPECT_THROW(SpectralMeasureSpec::riesz(2, 2.5), std::invalid_argument);
  EXPECT_THROW(SpectralMeasureSpec::riesz(2, 0.0), std::invalid_argument);
}

TEST(Measure, OriginCellMatchesOneDimensionalClosedForm) {
  // d=1: int_{-a}^{a} c |x|^(beta-1) dx = 2 c a^beta / beta.
  for (double beta : {0.3, 0.5, 0.9}) {
    double a = 0.5;
    double want = 2.0 * riesz_constant(1, beta) * std::pow(a, beta) / beta;
    EXPECT_NEAR(riesz_origin_cell(1, beta, a), want, 1e-12 * want);
  }
}

TEST(Measure, OriginCellMatchesRadialQuadrature) {
  // Shell quadrature in u = r^beta, where the radial integrand is constant.
  const int d = 3;
  const double beta = 1.4, a = 0.25;
  double radial = gauss_legendre(
      [&](double u) {
        double r = std::pow(u, 1.0 / beta);
        double jac = std::pow(u, 1.0 / beta - 1.0) / beta;
        return 4.0 * std::numbers::pi * r * r * std::pow(r, beta - d) * jac;
      },
      0.0, std::pow(a, beta), 8);
  double want = radial * riesz_constant(d, beta);
  EXPECT_NEAR(riesz_origin_cell(d, beta, a), want, 1e-12 * want);
}

TEST(Measure, RieszLowModesMatchBallIntegral) {
  const int d = 4;
  const double beta = 1.5;
  auto g = build_grid(d, 1.0, 4);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(d, beta), g);
  double lattice = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.radius(k) <= 1.0 + 1e-12) lattice += m.weights[k];
  double ball = riesz_constant(d, beta) * sphere_area(d) / beta;
  EXPECT_NEAR(lattice, ball, 0.05 * ball);
}

TEST(Increments, OriginVarianceIsDt) {
  auto g = build_grid(1, 1.0, 1);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(1), g);
  TimeGrid tg(100000, 10.0);
  auto n = sample_increments(m, tg, {42, 0});
  Moments mo;
  for (std::size_t j = 0; j < tg.steps; ++j) {
    EXPECT_EQ(n.step(j)[0].imag(), 0.0);
    mo.add(n.step(j)[0].real());
  }
  EXPECT_LT(std::abs(mo.variance() - tg.dt), 3.0 * mo.variance_se());
}

TEST(Increments, PairedPartsHaveHalfVariance) {
  auto g = build_grid(1, 1.0, 1);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(1), g);
  TimeGrid tg(100000, 1.0);
  auto n = sample_increments(m, tg, {3, 5});
  Moments re, im;
  CompensatedSum cross;
  for (std::size_t j = 0; j < tg.steps; ++j) {
    re.add(n.step(j)[1].real());
    im.add(n.step(j)[1].imag());
    cross.add(n.step(j)[1].real() * n.step(j)[1].imag());
  }
  double half = 0.5 * tg.dt;
  EXPECT_LT(std::abs(re.variance() - half), 3.0 * re.variance_se());
  EXPECT_LT(std::abs(im.variance() - half), 3.0 * im.variance_se());
  double corr = cross.value() / tg.steps / half;
  EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(double(tg.steps)));
}

TEST(Increments, HermitianExactly) {
  auto g = build_grid(3, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(3, 1.0), g);
  auto n = sample_increments(m, TimeGrid(5, 1.0), {1, 2});
  for (std::size_t j = 0; j < 5; ++j) {
    auto row = n.step(j);
    for (std::size_t k = 0; k < g.size(); ++k)
      EXPECT_EQ(row[g.pair(k)] - std::conj(row[k]), cplx(0.0));
  }
}

TEST(Increments, DeterministicPerKey) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.0), g);
  auto a = sample_increments(m, TimeGrid(4, 1.0), {9, 17});
  auto b = sample_increments(m, TimeGrid(4, 1.0), {9, 17});
  auto c = sample_increments(m, TimeGrid(4, 1.0), {9, 18});
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_NE(a.beta, c.beta);
}

TEST(Increments, ZeroWeightModesSkipped) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::dirac(2), g);
  auto n = sample_increments(m, TimeGrid(3, 1.0), {1, 0});
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_EQ(n.step(1)[k], cplx(0.0));
}

TEST(Increments, RejectsOversizedReplica) {
  auto g = build_grid(1, 1.0, 1);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(1), g);
  EXPECT_THROW(sample_increments(m, TimeGrid(2, 1.0), {1, 1ull << 40}),
               std::invalid_argument);
}

TEST(Increments, BinaryRoundTrip) {
  auto g = build_grid(2, 1.5, 1);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.0), g);
  auto n = sample_increments(m, TimeGrid(3, 0.6), {77, 4});
  std::string path = ::testing::TempDir() + "noise.bin";
  write_increments(path, n);
  auto back = read_increments(path);
  EXPECT_EQ(back.beta, n.beta);
  EXPECT_EQ(back.key.seed, 77u);
  EXPECT_EQ(back.key.replica, 4u);
  EXPECT_EQ(back.time.steps, 3u);
  EXPECT_DOUBLE_EQ(back.time.dt, n.time.dt);
  EXPECT_TRUE(back.grid.same_shape(g));
  std::remove(path.c_str());
}

TEST(Field, RealWithNegligibleImaginaryResidue) {
  auto g = build_grid(3, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(3, 1.5), g);
  auto n = sample_increments(m, TimeGrid(4, 1.0), {5, 0});
  for (std::size_t j = 0; j < 4; ++j) {
    double residue = 0.0;
    auto f = realize_field_increment(n, j, m, &residue);
    double mag = 0.0;
    for (double v : f) mag = std::max(mag, std::abs(v));
    EXPECT_LT(residue, 1e-12 * mag);
  }
}

TEST(Field, DiracGivesConstantField) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::dirac(2), g);
  auto n = sample_increments(m, TimeGrid(2, 1.0), {5, 0});
  auto f = realize_field_increment(n, 1, m);
  for (double v : f) EXPECT_EQ(v, f[0]);
}

TEST(Field, CovarianceMatchesModeExpansionAndIsStationary) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  TimeGrid tg(10000, 1.0);
  auto n = sample_increments(m, tg, {11, 0});
  auto fields = realize_all_increments(n, m);
  const std::size_t M = g.size();
  // Per (z, y): products Delta M(z) Delta M(z + y) over the steps.
  std::vector<Moments> prod(M * M);
  for (std::size_t j = 0; j < tg.steps; ++j) {
    const double* f = fields.data() + j * M;
    for (std::size_t z = 0; z < M; ++z)
      for (std::size_t y = 0; y < M; ++y) prod[z * M + y].add(f[z] * f[g.shifted(z, y)]);
  }
  const double zcrit = family_critical_z(M * M);
  for (std::size_t y = 0; y < M; ++y) {
    double oracle = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      double phase = 0.0;
      for (int a = 0; a < 2; ++a)
        phase += g.frequency(k, a) * g.coordinate(y, a);
      oracle += m.weights[k] * std::cos(2 * std::numbers::pi * phase);
    }
    oracle *= tg.dt;
    for (std::size_t z = 0; z < M; ++z) {
      const auto& p = prod[z * M + y];
      EXPECT_LT(std::abs(p.mean() - oracle), zcrit * p.mean_se())
          << "z=" << z << " y=" << y;
    }
  }
}

TEST(Field, NoiseMassIsometry) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.0), g);
  ConsBasis basis(m);
  // phi in the span of the basis.
  std::vector<double> phi(g.size(), 0.0);
  for (std::size_t i = 0; i < basis.size(); i += 3) {
    auto e = basis.values(i);
    for (std::size_t z = 0; z < g.size(); ++z) phi[z] += (0.3 + 0.1 * i) * e[z];
  }
  TimeGrid tg(4, 1.0);
  Moments mo;
  const double cell = g.cell_volume();
  for (std::uint64_t r = 0; r < 20000; ++r) {
    auto n = sample_increments(m, tg, {21, r});
    double mass = 0.0;
    for (std::size_t j = 0; j < tg.steps; ++j) {
      auto f = realize_field_increment(n, j, m);
      for (std::size_t z = 0; z < g.size(); ++z) mass += phi[z] * f[z] * cell;
    }
    mo.add(mass);
  }
  double oracle = inner_h(phi, phi, m) * tg.horizon();
  EXPECT_LT(std::abs(mo.variance() - oracle), 3.0 * mo.variance_se());
}

TEST(InnerH, PositiveSemidefinite) {
  auto g = build_grid(2, 1.0, 3);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 0.7), g);
  for (int s = 0; s < 20; ++s) {
    auto f = random_field(g, s);
    EXPECT_GE(inner_h(f, f, m), 0.0);
  }
}

TEST(InnerH, DiracIsProductOfMeans) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::dirac(2), g);
  auto a = random_field(g, 1), b = random_field(g, 2);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= g.size();
  mb /= g.size();
  EXPECT_NEAR(inner_h(a, b, m), ma * mb, 1e-14);
}

TEST(InnerH, LebesgueIsLatticeParseval) {
  auto g = build_grid(3, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(3), g);
  auto a = random_field(g, 3), b = random_field(g, 4);
  double direct = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) direct += a[i] * b[i];
  direct *= g.cell_volume();
  EXPECT_NEAR(inner_h(a, b, m), direct, 1e-13);
}

TEST(InnerH, RejectsMismatchedLengths) {
  auto g = build_grid(2, 1.0, 1);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(2), g);
  std::vector<double> a(g.size()), b(g.size() + 1);
  EXPECT_THROW(inner_h(a, b, m), GridMismatch);
}

TEST(Basis, DiracIsConstantOne) {
  auto g = build_grid(2, 1.0, 2);
  ConsBasis b(discretize_measure(SpectralMeasureSpec::dirac(2), g));
  ASSERT_EQ(b.size(), 1u);
  for (double v : b.values(0)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Basis, LebesgueOneDimensionalCount) {
  auto g = build_grid(1, 1.0, 1);
  EXPECT_EQ(ConsBasis(discretize_measure(SpectralMeasureSpec::lebesgue(1), g)).size(),
            3u);
}

TEST(Basis, GramIsIdentity) {
  auto g = build_grid(2, 1.7, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.3), g);
  ConsBasis b(m);
  EXPECT_EQ(b.size(), m.positive_count());
  std::vector<std::vector<double>> e;
  for (std::size_t i = 0; i < b.size(); ++i) e.push_back(b.values(i));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      EXPECT_NEAR(inner_h(e[i], e[j], m), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Basis, ProjectionMatchesInnerProduct) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  ConsBasis b(m);
  auto phi = random_field(g, 8);
  auto c = b.project(phi);
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_NEAR(c[i], inner_h(phi, b.values(i), m), 1e-12);
}

TEST(Basis, RepresenterPairsToProjection) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  ConsBasis b(m);
  auto phi = random_field(g, 9);
  auto c = b.project(phi);
  for (std::size_t i = 0; i < b.size(); i += 5) {
    auto rep = b.representer(i);
    double pair = 0.0;
    for (std::size_t z = 0; z < g.size(); ++z) pair += phi[z] * rep[z];
    EXPECT_NEAR(pair * g.cell_volume(), c[i], 1e-12);
  }
}

TEST(Basis, FieldIsSumOfRepresentersTimesIncrements) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  ConsBasis b(m);
  auto n = sample_increments(m, TimeGrid(3, 1.0), {4, 1});
  for (std::size_t j = 0; j < 3; ++j) {
    auto field = realize_field_increment(n, j, m);
    auto dw = b.increments(n, j);
    std::vector<double> sum(g.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto rep = b.representer(i);
      for (std::size_t z = 0; z < g.size(); ++z) sum[z] += rep[z] * dw[i];
    }
    auto synth = b.field_from_coefficients(dw);
    for (std::size_t z = 0; z < g.size(); ++z) {
      EXPECT_NEAR(sum[z], field[z], 1e-12);
      EXPECT_NEAR(synth[z], field[z], 1e-12);
    }
  }
}

TEST(Basis, RieszMapMatchesBasisExpansion) {
  auto g = build_grid(2, 1.0, 2);
  auto m = discretize_measure(SpectralMeasureSpec::riesz(2, 1.5), g);
  ConsBasis b(m);
  auto phi = random_field(g, 10);
  auto direct = riesz_representer(phi, m);
  auto via = b.field_from_coefficients(b.project(phi));
  for (std::size_t z = 0; z < g.size(); ++z) EXPECT_NEAR(direct[z], via[z], 1e-12);
}

TEST(Basis, RejectsEmptyMeasure) {
  auto g = build_grid(1, 1.0, 1);
  auto m = discretize_measure(SpectralMeasureSpec::lebesgue(1), g);
  m.weights.assign(g.size(), 0.0);
  EXPECT_THROW(ConsBasis{m}, std::invalid_argument);
}
