#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "swave/core/grid.hpp"
#include "swave/core/numerics.hpp"
#include "swave/kernels/spectral_measure.hpp"

namespace swave {

// Spectral measure atomized on the mode lattice: w_k is the mass of the
// cell around xi_k.
struct DiscreteSpectralMeasure {
  TorusGrid grid;
  SpectralMeasureSpec spec;
  std::vector<double> weights;

  double total_mass() const { return compensated_total(weights); }

  std::size_t positive_count() const {
    std::size_t n = 0;
    for (double w : weights) n += w > 0.0;
    return n;
  }

  DiscreteSpectralMeasure scaled(double c) const {
    if (!(c >= 0.0)) throw std::invalid_argument("measure scale must be >= 0");
    DiscreteSpectralMeasure out = *this;
    for (double& w : out.weights) w *= c;
    return out;
  }
};

// Mass of c |xi|^(beta - d) over the ball of radius `radius` (the ball
// inscribed in the origin cell): c |S^(d-1)| radius^beta / beta.
inline double riesz_origin_cell(int dim, double beta, double radius) {
  if (!(beta > 0.0) || !(beta < dim))
    throw std::invalid_argument("riesz origin cell: beta must lie in (0, d)");
  if (!(radius > 0.0)) throw std::invalid_argument("origin cell radius must be > 0");
  return riesz_constant(dim, beta) * sphere_area(dim) * std::pow(radius, beta) / beta;
}

inline DiscreteSpectralMeasure discretize_measure(const SpectralMeasureSpec& spec,
                                                  const TorusGrid& grid) {
  spec.validate();
  if (spec.dim != grid.dim())
    throw GridMismatch("measure dimension does not match grid dimension");
  DiscreteSpectralMeasure m{grid, spec, std::vector<double>(grid.size(), 0.0)};
  const double cell = 1.0 / grid.volume();  // (1/L)^d
  switch (spec.kind) {
    case MeasureKind::dirac:
      m.weights[0] = 1.0;
      break;
    case MeasureKind::lebesgue:
      for (double& w : m.weights) w = cell;
      break;
    case MeasureKind::riesz:
      for (std::size_t k = 1; k < grid.size(); ++k)
        m.weights[k] = spec.density(grid.radius(k)) * cell;
      m.weights[0] =
          riesz_origin_cell(grid.dim(), spec.beta, 0.5 / grid.period());
      break;
    case MeasureKind::table:
      for (std::size_t k = 0; k < grid.size(); ++k)
        m.weights[k] = spec.density(grid.radius(k)) * cell;
      break;
  }
  if (m.positive_count() == 0)
    throw std::invalid_argument("discretized measure has no positive weight");
  return m;
}

}  // namespace swave
