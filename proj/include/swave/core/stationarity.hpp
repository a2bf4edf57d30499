#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/core/grid.hpp"
#include "swave/core/stats.hpp"

namespace swave {

struct StationarityReport {
  std::size_t replicas = 0;
  std::size_t tests = 0;
  double critical_z = 0.0;
  double worst_z = 0.0;
  std::size_t worst_point = 0;
  std::size_t worst_shift = 0;
  bool passed = false;
};

// Tests that E[<f(x), f(x + y)>] does not depend on x.  Each sample is a
// stack of `channels` lattice fields (channel-major); the product sums over
// channels.  Every (x, y) with x != 0 is compared with (0, y) through the
// per-replica paired difference, at a family-wise level equal to a single
// 3-sigma test.
class StationarityAccumulator {
 public:
  StationarityAccumulator() = default;
  StationarityAccumulator(const TorusGrid& grid, std::size_t channels = 1)
      : grid_(grid), channels_(channels), diffs_(grid.size() * grid.size()),
        scale_(grid.size()) {
    if (channels == 0) throw std::invalid_argument("stationarity needs a channel");
  }

  void add(std::span<const double> sample) {
    const std::size_t M = grid_.size();
    if (sample.size() != M * channels_)
      throw GridMismatch("stationarity sample has the wrong size");
    auto product = [&](std::size_t x, std::size_t y) {
      const std::size_t xy = grid_.shifted(x, y);
      double s = 0.0;
      for (std::size_t c = 0; c < channels_; ++c)
        s += sample[c * M + x] * sample[c * M + xy];
      return s;
    };
    for (std::size_t y = 0; y < M; ++y) {
      const double base = product(0, y);
      scale_[y].add(std::abs(base));
      for (std::size_t x = 1; x < M; ++x) diffs_[y * M + x].add(product(x, y) - base);
    }
    ++count_;
  }

  void merge(const StationarityAccumulator& o) {
    if (o.count_ == 0) return;
    if (diffs_.empty()) {
      *this = o;
      return;
    }
    for (std::size_t n = 0; n < diffs_.size(); ++n) diffs_[n].merge(o.diffs_[n]);
    for (std::size_t n = 0; n < scale_.size(); ++n) scale_[n].merge(o.scale_[n]);
    count_ += o.count_;
  }

  // A difference counts as zero when it is below `rel_floor` times the
  // covariance scale, which covers deterministic inputs (SE = 0).
  StationarityReport report(double rel_floor = 1e-12) const {
    if (count_ < 2) throw std::runtime_error("stationarity test needs >= 2 replicas");
    const std::size_t M = grid_.size();
    StationarityReport r;
    r.replicas = count_;
    r.tests = M * (M - 1);
    r.critical_z = family_critical_z(r.tests);
    r.passed = true;
    for (std::size_t y = 0; y < M; ++y) {
      const double floor = rel_floor * std::max(scale_[y].mean(), 1e-300);
      for (std::size_t x = 1; x < M; ++x) {
        const auto& d = diffs_[y * M + x];
        const double dev = std::abs(d.mean());
        if (dev <= floor) continue;
        const double se = d.mean_se();
        const double z = se > 0.0 ? dev / se : std::numeric_limits<double>::infinity();
        if (z > r.worst_z) {
          r.worst_z = z;
          r.worst_point = x;
          r.worst_shift = y;
        }
      }
    }
    r.passed = r.worst_z <= r.critical_z;
    return r;
  }

  std::size_t count() const noexcept { return count_; }

 private:
  TorusGrid grid_;
  std::size_t channels_ = 1;
  std::size_t count_ = 0;
  std::vector<Moments> diffs_;
  std::vector<Moments> scale_;
};

}  // namespace swave
