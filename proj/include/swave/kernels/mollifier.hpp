#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/core/grid.hpp"

namespace swave {

enum class MollifierKind { identity, band_limit, gaussian, fejer, zero };

inline std::string to_string(MollifierKind k) {
  switch (k) {
    case MollifierKind::identity: return "identity";
    case MollifierKind::band_limit: return "band-limit";
    case MollifierKind::gaussian: return "gaussian";
    case MollifierKind::fejer: return "fejer";
    case MollifierKind::zero: return "zero";
  }
  return "unknown";
}

inline MollifierKind mollifier_kind_from(const std::string& s) {
  if (s == "identity" || s == "none") return MollifierKind::identity;
  if (s == "band-limit" || s == "bandlimit") return MollifierKind::band_limit;
  if (s == "gaussian") return MollifierKind::gaussian;
  if (s == "fejer" || s == "fejér") return MollifierKind::fejer;
  if (s == "zero") return MollifierKind::zero;
  throw std::invalid_argument("unknown mollifier family '" + s + "'");
}

// Fourier multiplier of an approximation of the identity, with values in
// [0, 1] and tending to 1 as the index grows.  The zero kind is the
// degenerate limit that kills every mode.
struct Mollifier {
  MollifierKind kind = MollifierKind::identity;
  int index = 1;

  Mollifier() = default;
  Mollifier(MollifierKind k, int n) : kind(k), index(n) {
    if (needs_index() && n < 1)
      throw std::invalid_argument("mollifier index must be >= 1");
  }

  static Mollifier identity() { return {}; }

  bool needs_index() const {
    return kind != MollifierKind::identity && kind != MollifierKind::zero;
  }

  double operator()(const std::vector<double>& xi) const {
    const double n = index;
    switch (kind) {
      case MollifierKind::identity: return 1.0;
      case MollifierKind::zero: return 0.0;
      case MollifierKind::band_limit: {
        double sup = 0.0;
        for (double v : xi) sup = std::max(sup, std::abs(v));
        return sup <= n ? 1.0 : 0.0;
      }
      case MollifierKind::gaussian: {
        double r2 = 0.0;
        for (double v : xi) r2 += v * v;
        return std::exp(-r2 / (2.0 * n * n));
      }
      case MollifierKind::fejer: {
        double out = 1.0;
        for (double v : xi) out *= std::max(0.0, 1.0 - std::abs(v) / (n + 1.0));
        return out;
      }
    }
    return 1.0;
  }

  // Multiplier evaluated on every mode of the grid.
  std::vector<double> on_grid(const TorusGrid& grid) const {
    std::vector<double> out(grid.size());
    std::vector<double> xi(grid.dim());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      for (int a = 0; a < grid.dim(); ++a) xi[a] = grid.frequency(k, a);
      out[k] = (*this)(xi);
    }
    return out;
  }

  std::string describe() const {
    return needs_index() ? to_string(kind) + "(" + std::to_string(index) + ")"
                         : to_string(kind);
  }
};

}  // namespace swave
