#pragma once

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>

namespace swave {

// Fourier transform of the fundamental solution of the wave operator,
// sin(2 pi t r) / (2 pi r) with r = |xi|.
inline double eval_wave_ft(double t, double r) {
  if (t < 0.0 || r < 0.0 || std::isnan(t) || std::isnan(r))
    throw std::invalid_argument("wave kernel needs t >= 0 and r >= 0");
  const double phase = 2.0 * std::numbers::pi * t * r;
  if (phase < 1e-4) return t * (1.0 - phase * phase / 6.0);
  return std::sin(phase) / (2.0 * std::numbers::pi * r);
}

// A kernel is anything with a radial Fourier transform in (time, |xi|) and
// an analytic bound on its squared modulus.
template <class K>
concept RadialKernel = requires(const K& k, double t, double r) {
  { k.ft(t, r) } -> std::convertible_to<double>;
  { k.sup_sq(t) } -> std::convertible_to<double>;
};

struct WaveKernel {
  double ft(double t, double r) const { return eval_wave_ft(t, r); }
  // sup over xi of |FG(s)(xi)|^2, attained as xi -> 0.
  double sup_sq(double s) const { return s * s; }
};

// Flat spectrum kernel; mainly a test double for the generic paths.
struct ConstantKernel {
  double level = 1.0;
  double ft(double, double) const { return level; }
  double sup_sq(double) const { return level * level; }
};

template <RadialKernel K>
double j2(double s, const K& kernel) {
  if (!(s >= 0.0)) throw std::invalid_argument("j2 needs s >= 0");
  return kernel.sup_sq(s);
}

template <class K>
inline constexpr bool is_wave_kernel_v = std::same_as<K, WaveKernel>;

}  // namespace swave
