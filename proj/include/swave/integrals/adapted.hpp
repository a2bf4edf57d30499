#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/noise/increments.hpp"

namespace swave {

// Read access to the increments of steps strictly before `horizon`.  Any
// later access is an adaptedness violation and throws.
class PastNoise {
 public:
  PastNoise(const NoiseIncrements& noise, const DiscreteSpectralMeasure& measure,
            std::size_t horizon)
      : noise_(noise), measure_(measure), horizon_(horizon) {}

  std::size_t horizon() const noexcept { return horizon_; }
  const TorusGrid& grid() const noexcept { return noise_.grid; }
  const TimeGrid& time() const noexcept { return noise_.time; }

  std::span<const cplx> increments(std::size_t j) const {
    check(j);
    return noise_.step(j);
  }
  std::vector<double> field(std::size_t j) const {
    check(j);
    return realize_field_increment(noise_, j, measure_);
  }

 private:
  void check(std::size_t j) const {
    if (j >= horizon_)
      throw std::logic_error("integrand read noise at or after its own step");
  }
  const NoiseIncrements& noise_;
  const DiscreteSpectralMeasure& measure_;
  std::size_t horizon_;
};

// Z(t_j, z_m) for j = 0..steps (one row per time node), row-major.
struct AdaptedIntegrand {
  std::size_t steps = 0;
  std::size_t points = 0;
  std::vector<double> values;
  bool adapted = false;

  AdaptedIntegrand() = default;
  AdaptedIntegrand(std::size_t n_steps, std::size_t n_points, bool is_adapted)
      : steps(n_steps), points(n_points), values((n_steps + 1) * n_points, 0.0),
        adapted(is_adapted) {}

  std::span<const double> row(std::size_t j) const {
    if (j > steps) throw std::out_of_range("integrand row out of range");
    return {values.data() + j * points, points};
  }
  std::span<double> row(std::size_t j) {
    if (j > steps) throw std::out_of_range("integrand row out of range");
    return {values.data() + j * points, points};
  }

  void require_shape(const TorusGrid& grid, const TimeGrid& time) const {
    if (points != grid.size() || steps != time.steps)
      throw GridMismatch("integrand shape does not match the discretization");
  }
};

// Row j from the increments of steps < j.  Called in increasing j, so an
// evaluator may keep state between calls.
using CausalEvaluator =
    std::function<std::vector<double>(std::size_t step, const PastNoise& past)>;

inline AdaptedIntegrand evaluate_adapted(const CausalEvaluator& eval,
                                         const NoiseIncrements& noise,
                                         const DiscreteSpectralMeasure& measure) {
  noise.grid.require_same(measure.grid, "adapted integrand");
  AdaptedIntegrand z(noise.time.steps, noise.grid.size(), true);
  for (std::size_t j = 0; j <= noise.time.steps; ++j) {
    auto v = eval(j, PastNoise(noise, measure, j));
    if (v.size() != z.points) throw GridMismatch("evaluator returned a wrong-sized row");
    std::copy(v.begin(), v.end(), z.row(j).begin());
  }
  return z;
}

inline AdaptedIntegrand constant_integrand(const TorusGrid& grid, const TimeGrid& time,
                                           double c) {
  AdaptedIntegrand z(time.steps, grid.size(), true);
  std::fill(z.values.begin(), z.values.end(), c);
  return z;
}

// Deterministic integrand from a space-time function f(t, z index).
inline AdaptedIntegrand deterministic_integrand(
    const TorusGrid& grid, const TimeGrid& time,
    const std::function<double(double, std::size_t)>& f) {
  AdaptedIntegrand z(time.steps, grid.size(), true);
  for (std::size_t j = 0; j <= time.steps; ++j)
    for (std::size_t m = 0; m < grid.size(); ++m) z.row(j)[m] = f(time.node(j), m);
  return z;
}

// Coordinates Z_i of an integrand with values in a finite-dimensional
// Hilbert space.
struct HilbertIntegrand {
  std::vector<AdaptedIntegrand> coords;

  std::size_t size() const noexcept { return coords.size(); }
  bool adapted() const {
    for (const auto& c : coords)
      if (!c.adapted) return false;
    return true;
  }
};

}  // namespace swave
