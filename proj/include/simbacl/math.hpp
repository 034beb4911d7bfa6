#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "simbacl/error.hpp"

namespace simbacl {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Compensated (Kahan) accumulator. Used by the exact oracles, which do all
/// their arithmetic in linear space.
class KahanSum {
public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v)
    if (x > m) m = x;
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v)
    if (x != kNegInf) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_mean_exp(std::span<const double> v) {
  return logsumexp(v) - std::log(static_cast<double>(v.size()));
}

/// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw ConfigError("gamma_p: domain error");
  if (x == 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // series representation
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // continued fraction (modified Lentz)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

/// Chi-square CDF with `df` degrees of freedom.
inline double chi2_cdf(double x, double df) { return x <= 0 ? 0.0 : gamma_p(df / 2.0, x / 2.0); }

/// Chi-square quantile by bisection on the CDF.
inline double chi2_quantile(double df, double p) {
  if (p <= 0.0 || p >= 1.0) throw ConfigError("chi2_quantile: p must be in (0,1)");
  double lo = 0.0, hi = df + 10.0;
  while (chi2_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Two-sided standard normal quantile: z such that P(|Z| <= z) = level.
inline double normal_two_sided_quantile(double level) {
  return std::sqrt(chi2_quantile(1.0, level));
}

/// Upper tail of the chi-square distribution, for goodness-of-fit p-values.
inline double chi2_sf(double x, double df) { return 1.0 - chi2_cdf(x, df); }

inline double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace simbacl
