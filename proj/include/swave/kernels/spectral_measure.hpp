#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace swave {

enum class MeasureKind { riesz, dirac, lebesgue, table };

inline std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::riesz: return "riesz";
    case MeasureKind::dirac: return "dirac";
    case MeasureKind::lebesgue: return "lebesgue";
    case MeasureKind::table: return "table";
  }
  return "unknown";
}

// Normalizing constant c(d, beta) with F(|x|^-beta) = c |xi|^(beta - d)
// under F phi(xi) = int exp(-2 pi i xi.x) phi(x) dx.
inline double riesz_constant(int dim, double beta) {
  return std::pow(std::numbers::pi, beta - 0.5 * dim) *
         std::tgamma(0.5 * (dim - beta)) / std::tgamma(0.5 * beta);
}

// Area of the unit sphere in R^d.
inline double sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

struct SpectralMeasureSpec {
  MeasureKind kind = MeasureKind::riesz;
  int dim = 1;
  double beta = 1.0;
  // Table measures: density samples at increasing radii, linear in between
  // and zero beyond the last radius.
  std::vector<double> table_radii;
  std::vector<double> table_density;
  bool radial = true;
  bool symmetric = true;

  static SpectralMeasureSpec riesz(int dim, double beta) {
    SpectralMeasureSpec s;
    s.kind = MeasureKind::riesz;
    s.dim = dim;
    s.beta = beta;
    s.validate();
    return s;
  }
  static SpectralMeasureSpec dirac(int dim) {
    SpectralMeasureSpec s;
    s.kind = MeasureKind::dirac;
    s.dim = dim;
    return s;
  }
  static SpectralMeasureSpec lebesgue(int dim) {
    SpectralMeasureSpec s;
    s.kind = MeasureKind::lebesgue;
    s.dim = dim;
    return s;
  }
  static SpectralMeasureSpec table(int dim, std::vector<double> radii,
                                   std::vector<double> density) {
    SpectralMeasureSpec s;
    s.kind = MeasureKind::table;
    s.dim = dim;
    s.table_radii = std::move(radii);
    s.table_density = std::move(density);
    s.validate();
    return s;
  }

  void validate() const {
    if (dim < 1) throw std::invalid_argument("measure dimension must be >= 1");
    if (kind == MeasureKind::riesz && !(beta > 0.0 && beta < dim))
      throw std::invalid_argument("riesz exponent beta=" + std::to_string(beta) +
                                  " outside ]0, d[ with d=" +
                                  std::to_string(dim));
    if (kind == MeasureKind::table) {
      if (table_radii.empty() || table_radii.size() != table_density.size())
        throw std::invalid_argument("table measure needs matching samples");
      for (std::size_t i = 0; i < table_radii.size(); ++i) {
        if (table_density[i] < 0.0 || !std::isfinite(table_density[i]))
          throw std::invalid_argument("table density must be >= 0");
        if (i > 0 && !(table_radii[i] > table_radii[i - 1]))
          throw std::invalid_argument("table radii must increase");
      }
      if (table_radii.front() < 0.0)
        throw std::invalid_argument("table radii must be >= 0");
    }
  }

  bool has_density() const { return kind != MeasureKind::dirac; }

  // Radial density; the riesz density is infinite at the origin.
  double density(double r) const {
    switch (kind) {
      case MeasureKind::riesz:
        return riesz_constant(dim, beta) * std::pow(r, beta - dim);
      case MeasureKind::lebesgue: return 1.0;
      case MeasureKind::dirac: return 0.0;
      case MeasureKind::table: {
        if (r <= table_radii.front()) return table_density.front();
        if (r > table_radii.back()) return 0.0;
        auto it = std::upper_bound(table_radii.begin(), table_radii.end(), r);
        std::size_t hi = static_cast<std::size_t>(it - table_radii.begin());
        if (hi >= table_radii.size()) return table_density.back();
        std::size_t lo = hi - 1;
        double f = (r - table_radii[lo]) / (table_radii[hi] - table_radii[lo]);
        return table_density[lo] + f * (table_density[hi] - table_density[lo]);
      }
    }
    return 0.0;
  }

  std::string describe() const {
    if (kind == MeasureKind::riesz)
      return "riesz(beta=" + std::to_string(beta) + ")";
    return to_string(kind);
  }
};

}  // namespace swave
