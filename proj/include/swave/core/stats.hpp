#pragma once

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "swave/core/numerics.hpp"

namespace swave {

// Power sums up to order four, mergeable in a fixed order.
class Moments {
 public:
  void add(double x) noexcept {
    ++count_;
    double x2 = x * x;
    s1_.add(x);
    s2_.add(x2);
    s3_.add(x2 * x);
    s4_.add(x2 * x2);
  }

  void merge(const Moments& o) noexcept {
    count_ += o.count_;
    s1_.merge(o.s1_);
    s2_.merge(o.s2_);
    s3_.merge(o.s3_);
    s4_.merge(o.s4_);
  }

  std::size_t count() const noexcept { return count_; }
  double mean() const { return raw(1); }
  double second_moment() const { return raw(2); }

  // Unbiased sample variance.
  double variance() const {
    require(2);
    double n = static_cast<double>(count_);
    double m = mean();
    double v = (raw(2) - m * m) * n / (n - 1.0);
    return std::max(v, 0.0);
  }

  double mean_se() const { return std::sqrt(variance() / count_); }

  // Standard error of the second-moment estimate mean(x^2).
  double second_moment_se() const {
    require(2);
    double n = static_cast<double>(count_);
    double var_sq = std::max(raw(4) - raw(2) * raw(2), 0.0) * n / (n - 1.0);
    return std::sqrt(var_sq / n);
  }

  // Standard error of the sample variance from the fourth central moment.
  double variance_se() const {
    require(2);
    double n = static_cast<double>(count_);
    double m = mean();
    double m2 = raw(2) - m * m;
    double m4 = raw(4) - 4.0 * m * raw(3) + 6.0 * m * m * raw(2) -
                3.0 * m * m * m * m;
    double v = std::max(m4 - m2 * m2 * (n - 3.0) / (n - 1.0), 0.0) / n;
    return std::sqrt(v);
  }

 private:
  double raw(int order) const {
    require(1);
    const CompensatedSum* s[] = {&s1_, &s2_, &s3_, &s4_};
    return s[order - 1]->value() / static_cast<double>(count_);
  }

  void require(std::size_t n) const {
    if (count_ < n) throw std::logic_error("not enough samples for statistic");
  }

  std::size_t count_ = 0;
  CompensatedSum s1_, s2_, s3_, s4_;
};

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Two-sided critical z for a family of `tests` comparisons whose overall
// false-alarm rate matches a single 3-sigma test.
inline double family_critical_z(std::size_t tests) {
  const double alpha = 2.0 * (1.0 - normal_cdf(3.0));
  if (tests <= 1) return 3.0;
  boost::math::normal_distribution<double> unit;
  return boost::math::quantile(boost::math::complement(
      unit, alpha / (2.0 * static_cast<double>(tests))));
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t samples = 0;
  bool passed = false;
};

// Asymptotic Kolmogorov distribution tail with the Stephens small-sample
// correction.
inline double kolmogorov_tail(double d, std::size_t n) {
  double sn = std::sqrt(static_cast<double>(n));
  double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

template <class Cdf>
KsResult ks_test(std::vector<double> samples, Cdf&& cdf, double alpha = 0.01) {
  if (samples.empty()) throw std::invalid_argument("KS test on empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  KsResult r;
  r.statistic = d;
  r.samples = samples.size();
  r.p_value = kolmogorov_tail(d, samples.size());
  r.passed = r.p_value >= alpha;
  return r;
}

}  // namespace swave
