#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/error.hpp"

namespace swave {

// Periodic lattice of (2K+1)^d points on [0, L)^d together with the dual
// mode lattice xi_k = k / L, k in {-K..K}^d.  Both share one flat index:
// mode k lives at DFT slot (k mod N) in row-major order, so the forward
// FFT of a lattice field lands directly on the mode list.
class TorusGrid {
 public:
  static constexpr std::size_t kDefaultMaxPoints = std::size_t{1} << 24;

  TorusGrid() = default;

  TorusGrid(int dim, double period, int cutoff,
            std::size_t max_points = kDefaultMaxPoints)
      : dim_(dim), period_(period), cutoff_(cutoff) {
    if (dim < 1) throw std::invalid_argument("grid dimension must be >= 1");
    if (!(period > 0.0) || !std::isfinite(period))
      throw std::invalid_argument("grid period must be positive and finite");
    if (cutoff < 0) throw std::invalid_argument("mode cutoff must be >= 0");
    side_ = 2 * cutoff + 1;
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) {
      if (total > max_points / static_cast<std::size_t>(side_))
        throw CapacityError("grid of (2K+1)^d = " + std::to_string(side_) +
                            "^" + std::to_string(dim) +
                            " points exceeds the budget of " +
                            std::to_string(max_points));
      total *= static_cast<std::size_t>(side_);
    }
    size_ = total;
    build_tables();
  }

  int dim() const noexcept { return dim_; }
  double period() const noexcept { return period_; }
  int cutoff() const noexcept { return cutoff_; }
  int side() const noexcept { return side_; }
  std::size_t size() const noexcept { return size_; }

  double spacing() const noexcept { return period_ / side_; }
  double cell_volume() const noexcept { return std::pow(spacing(), dim_); }
  double volume() const noexcept { return std::pow(period_, dim_); }

  // Signed mode component of flat index idx along axis a.
  int mode(std::size_t idx, int a) const {
    return signed_component(slot(idx, a));
  }

  std::vector<int> mode_vector(std::size_t idx) const {
    std::vector<int> k(dim_);
    for (int a = 0; a < dim_; ++a) k[a] = mode(idx, a);
    return k;
  }

  // Lattice coordinate m_a in {0..N-1} of flat index idx.
  int slot(std::size_t idx, int a) const {
    return static_cast<int>((idx / stride_[a]) % side_);
  }

  std::size_t index_of_mode(const std::vector<int>& k) const {
    check_arity(k.size());
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
      if (k[a] < -cutoff_ || k[a] > cutoff_)
        throw std::out_of_range("mode component outside [-K, K]");
      int s = k[a] < 0 ? k[a] + side_ : k[a];
      idx += static_cast<std::size_t>(s) * stride_[a];
    }
    return idx;
  }

  std::size_t index_of_point(const std::vector<int>& m) const {
    check_arity(m.size());
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
      int s = ((m[a] % side_) + side_) % side_;
      idx += static_cast<std::size_t>(s) * stride_[a];
    }
    return idx;
  }

  // Index of the negated mode; also the reflected lattice point.
  std::size_t pair(std::size_t idx) const { return pair_[idx]; }

  // Index of lattice point (idx + shift) with periodic wrap.
  std::size_t shifted(std::size_t idx, std::size_t shift) const {
    std::size_t out = 0;
    for (int a = 0; a < dim_; ++a) {
      int s = (slot(idx, a) + slot(shift, a)) % side_;
      out += static_cast<std::size_t>(s) * stride_[a];
    }
    return out;
  }

  // |xi_k| for the mode at idx.
  double radius(std::size_t idx) const { return radius_[idx]; }
  const std::vector<double>& radii() const noexcept { return radius_; }

  double frequency(std::size_t idx, int a) const {
    return mode(idx, a) / period_;
  }

  double coordinate(std::size_t idx, int a) const {
    return slot(idx, a) * spacing();
  }

  // True when idx is the representative of its +/- pair (or the origin).
  bool is_canonical(std::size_t idx) const { return idx <= pair_[idx]; }

  bool same_shape(const TorusGrid& other) const noexcept {
    return dim_ == other.dim_ && cutoff_ == other.cutoff_ &&
           period_ == other.period_;
  }

  void require_same(const TorusGrid& other, const char* what) const {
    if (!same_shape(other))
      throw GridMismatch(std::string(what) + ": grid mismatch");
  }

  std::vector<int> dims() const { return std::vector<int>(dim_, side_); }

 private:
  int signed_component(int s) const { return s <= cutoff_ ? s : s - side_; }

  void check_arity(std::size_t n) const {
    if (n != static_cast<std::size_t>(dim_))
      throw std::invalid_argument("coordinate arity does not match dimension");
  }

  void build_tables() {
    stride_.assign(dim_, 1);
    for (int a = dim_ - 2; a >= 0; --a)
      stride_[a] = stride_[a + 1] * static_cast<std::size_t>(side_);
    radius_.resize(size_);
    pair_.resize(size_);
    for (std::size_t idx = 0; idx < size_; ++idx) {
      double r2 = 0.0;
      std::size_t neg = 0;
      for (int a = 0; a < dim_; ++a) {
        int s = slot(idx, a);
        double f = signed_component(s) / period_;
        r2 += f * f;
        neg += static_cast<std::size_t>((side_ - s) % side_) * stride_[a];
      }
      radius_[idx] = std::sqrt(r2);
      pair_[idx] = neg;
    }
  }

  int dim_ = 0;
  double period_ = 1.0;
  int cutoff_ = 0;
  int side_ = 1;
  std::size_t size_ = 0;
  std::vector<std::size_t> stride_;
  std::vector<double> radius_;
  std::vector<std::size_t> pair_;
};

inline TorusGrid build_grid(int dim, double period, int cutoff,
                            std::size_t max_points =
                                TorusGrid::kDefaultMaxPoints) {
  return TorusGrid(dim, period, cutoff, max_points);
}

// Uniform time grid t_j = j * dt, j = 0..steps.
struct TimeGrid {
  std::size_t steps = 1;
  double dt = 1.0;

  TimeGrid() = default;
  TimeGrid(std::size_t n, double horizon) : steps(n), dt(horizon / n) {
    if (n == 0) throw std::invalid_argument("time steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  }

  double horizon() const noexcept { return steps * dt; }
  double node(std::size_t j) const noexcept { return j * dt; }
  // Kernel evaluation node for the stochastic term of step j.
  double mid(std::size_t j) const noexcept { return (j + 0.5) * dt; }
  // Trapezoid weight of node j in a sum that stops before the endpoint.
  double drift_weight(std::size_t j) const noexcept {
    return j == 0 ? 0.5 * dt : dt;
  }

  // Step index of time t, rejecting values off the grid.
  std::size_t index_of(double t) const {
    double q = t / dt;
    double r = std::round(q);
    if (r < 0.0 || r > static_cast<double>(steps) ||
        std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
      throw std::invalid_argument("time " + std::to_string(t) +
                                  " is not on the time grid");
    return static_cast<std::size_t>(r);
  }
};

}  // namespace swave
