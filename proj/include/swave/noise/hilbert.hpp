#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/core/fft.hpp"
#include "swave/core/numerics.hpp"
#include "swave/noise/discrete_measure.hpp"
#include "swave/noise/increments.hpp"

namespace swave {

// F phi(xi_k) approximated by the cell-weighted DFT.
inline std::vector<cplx> lattice_fourier(std::span<const double> phi,
                                         const TorusGrid& grid) {
  if (phi.size() != grid.size())
    throw GridMismatch("lattice function length does not match the grid");
  auto out = Fft(grid).forward_real(phi);
  const double cell = grid.cell_volume();
  for (auto& v : out) v *= cell;
  return out;
}

inline double inner_h(std::span<const double> phi, std::span<const double> psi,
                      const DiscreteSpectralMeasure& m) {
  if (phi.size() != psi.size()) throw GridMismatch("inner_h: length mismatch");
  auto a = lattice_fourier(phi, m.grid);
  auto b = lattice_fourier(psi, m.grid);
  CompensatedSum acc;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (m.weights[k] > 0.0) acc.add(m.weights[k] * (a[k] * std::conj(b[k])).real());
  return acc.value();
}

// Lattice field R phi with sum_m h^d psi(z_m) (R phi)(z_m) = <phi, psi>_H.
inline std::vector<double> riesz_representer(std::span<const double> phi,
                                             const DiscreteSpectralMeasure& m) {
  auto spec = lattice_fourier(phi, m.grid);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= m.weights[k];
  Fft(m.grid).backward(spec);
  std::vector<double> out(spec.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spec[i].real();
  return out;
}

// Orthonormal system of the discrete H: one element per positive-weight
// self-paired mode and a cosine/sine couple per positive-weight +/- pair.
class ConsBasis {
 public:
  enum class Kind { origin, cosine, sine };
  struct Element {
    std::size_t mode;
    Kind kind;
  };

  explicit ConsBasis(const DiscreteSpectralMeasure& m) : measure_(m) {
    const TorusGrid& g = m.grid;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.is_canonical(k) || m.weights[k] <= 0.0) continue;
      if (g.pair(k) == k) {
        elements_.push_back({k, Kind::origin});
      } else {
        elements_.push_back({k, Kind::cosine});
        elements_.push_back({k, Kind::sine});
      }
    }
    if (elements_.empty())
      throw std::invalid_argument("basis of an all-zero measure");
  }

  std::size_t size() const noexcept { return elements_.size(); }
  const Element& element(std::size_t i) const { return elements_.at(i); }
  const DiscreteSpectralMeasure& measure() const noexcept { return measure_; }
  const TorusGrid& grid() const noexcept { return measure_.grid; }

  // Values of e_i on the lattice.
  std::vector<double> values(std::size_t i) const {
    const auto& e = elements_.at(i);
    const TorusGrid& g = grid();
    const double w = measure_.weights[e.mode];
    double amp = 1.0 / (g.volume() * std::sqrt(w));
    if (e.kind != Kind::origin) amp *= std::numbers::sqrt2;
    std::vector<double> out(g.size());
    for (std::size_t m = 0; m < g.size(); ++m) {
      double phase = 0.0;
      for (int a = 0; a < g.dim(); ++a)
        phase += g.frequency(e.mode, a) * g.coordinate(m, a);
      phase *= 2.0 * std::numbers::pi;
      out[m] = e.kind == Kind::origin  ? amp
               : e.kind == Kind::cosine ? amp * std::cos(phase)
                                        : amp * std::sin(phase);
    }
    return out;
  }

  // w_k L^d e_i: the noise field picks up representer(i) * dW^i.
  std::vector<double> representer(std::size_t i) const {
    auto out = values(i);
    const double scale =
        measure_.weights[elements_.at(i).mode] * grid().volume();
    for (double& v : out) v *= scale;
    return out;
  }

  // <phi, e_i>_H for every i from the lattice Fourier coefficients.
  std::vector<double> project(std::span<const double> phi) const {
    return project_spectrum(lattice_fourier(phi, grid()));
  }

  std::vector<double> project_spectrum(std::span<const cplx> fphi) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& e = elements_[i];
      const double w = measure_.weights[e.mode];
      switch (e.kind) {
        case Kind::origin: out[i] = std::sqrt(w) * fphi[e.mode].real(); break;
        case Kind::cosine:
          out[i] = std::sqrt(2.0 * w) * fphi[e.mode].real();
          break;
        case Kind::sine:
          out[i] = -std::sqrt(2.0 * w) * fphi[e.mode].imag();
          break;
      }
    }
    return out;
  }

  // Brownian increments dW^i_j attached to each element for step j.
  std::vector<double> increments(const NoiseIncrements& noise,
                                 std::size_t j) const {
    grid().require_same(noise.grid, "basis increments");
    auto row = noise.step(j);
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& e = elements_[i];
      const cplx b = row[e.mode];
      switch (e.kind) {
        case Kind::origin: out[i] = b.real(); break;
        case Kind::cosine: out[i] = std::numbers::sqrt2 * b.real(); break;
        case Kind::sine: out[i] = -std::numbers::sqrt2 * b.imag(); break;
      }
    }
    return out;
  }

  // sum_i c_i * representer(i), synthesized spectrally.
  std::vector<double> field_from_coefficients(std::span<const double> c) const {
    if (c.size() != size()) throw std::invalid_argument("coefficient count mismatch");
    const TorusGrid& g = grid();
    std::vector<cplx> spec(g.size(), cplx(0.0));
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& e = elements_[i];
      const double sw = std::sqrt(measure_.weights[e.mode]);
      switch (e.kind) {
        case Kind::origin: spec[e.mode] += sw * c[i]; break;
        case Kind::cosine: spec[e.mode] += sw * c[i] / std::numbers::sqrt2; break;
        case Kind::sine:
          spec[e.mode] += cplx(0.0, -sw * c[i] / std::numbers::sqrt2);
          break;
      }
    }
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.is_canonical(k) && g.pair(k) != k) spec[g.pair(k)] = std::conj(spec[k]);
    Fft(g).backward(spec);
    std::vector<double> out(g.size());
    for (std::size_t m = 0; m < g.size(); ++m) out[m] = spec[m].real();
    return out;
  }

 private:
  DiscreteSpectralMeasure measure_;
  std::vector<Element> elements_;
};

inline ConsBasis cons_basis(const DiscreteSpectralMeasure& m) {
  return ConsBasis(m);
}

}  // namespace swave
