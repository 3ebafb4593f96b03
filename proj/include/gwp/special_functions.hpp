#pragma once

// Numerical kernel: log-gamma ratios, digamma, the Gauss hypergeometric
// series on [0,1] and the monotone root solver for the gamma-ratio equation
// Gamma(rho+x+a)/Gamma(rho+x) = b.
//
// Everything here is a pure function of its arguments.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "gwp/errors.hpp"

namespace gwp {

/// Tuning for solve_avoidance_inverse.
struct SolverConfig {
  double abs_tol = 1e-12;
  int max_iter = 200;
  double bracket_growth = 2.0;
};

/// Neumaier compensated accumulator for probability sums.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

namespace detail {

// lgamma without touching the global signgam.
inline double lgamma_signed(double x, int* sign) noexcept {
#if defined(__GLIBC__)
  return ::lgamma_r(x, sign);
#else
  const double v = std::lgamma(x);
  *sign = (x > 0.0 || static_cast<long long>(std::floor(x)) % 2 == 0) ? 1 : -1;
  return v;
#endif
}

inline long double lgamma_signed(long double x, int* sign) noexcept {
#if defined(__GLIBC__)
  return ::lgammal_r(x, sign);
#else
  *sign = 1;
  return std::lgamma(x);
#endif
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
  int sign = 1;
  return detail::lgamma_signed(x, &sign);
}

inline long double log_gamma(long double x) {
  if (!(x > 0.0L)) throw DomainError("log_gamma: argument must be positive");
  int sign = 1;
  return detail::lgamma_signed(x, &sign);
}

/// ln of the rising factorial x_(r) = Gamma(x+r)/Gamma(x).
inline double log_rising(double x, double r) {
  if (!(x > 0.0)) throw DomainError("log_rising: x must be positive");
  if (!(x + r > 0.0)) throw DomainError("log_rising: x + r must be positive");
  if (r == 0.0) return 0.0;
  return log_gamma(x + r) - log_gamma(x);
}

inline long double log_rising(long double x, long double r) {
  if (!(x > 0.0L)) throw DomainError("log_rising: x must be positive");
  if (!(x + r > 0.0L)) throw DomainError("log_rising: x + r must be positive");
  if (r == 0.0L) return 0.0L;
  return log_gamma(x + r) - log_gamma(x);
}

/// Psi(t) for t > 0: upward recurrence to t >= 12, then the asymptotic
/// expansion through the t^-12 Bernoulli term.
inline double digamma(double t) {
  if (!(t > 0.0)) throw DomainError("digamma: argument must be positive");
  double shift = 0.0;
  while (t < 12.0) {
    shift -= 1.0 / t;
    t += 1.0;
  }
  const double inv = 1.0 / t;
  const double inv2 = inv * inv;
  // B_2n / (2n) for n = 1..6
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
  return shift + std::log(t) - 0.5 * inv - series;
}

/// Gauss hypergeometric 2F1(a, b; c; z) for z in [0, 1].
///
/// For z < 1 the defining series is summed until a term falls below
/// `rel_tol` times the partial sum while terms are decreasing. At z = 1 the
/// Gauss summation Gamma(c)Gamma(c-a-b)/(Gamma(c-a)Gamma(c-b)) is used,
/// which requires c - a - b > 0.
inline double gauss_2f1(double a, double b, double c, double z, double rel_tol = 1e-15,
                        std::size_t max_terms = 10'000'000) {
  if (!(c > 0.0)) throw DomainError("gauss_2f1: c must be positive");
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("gauss_2f1: z must lie in [0, 1]");
  if (z == 0.0) return 1.0;

  if (z == 1.0) {
    const double excess = c - a - b;
    if (!(excess > 0.0)) {
      throw ConvergenceError("gauss_2f1: series diverges at z = 1 when c - a - b <= 0");
    }
    // Gamma(c - a) or Gamma(c - b) at a pole makes the value vanish.
    for (double pole : {c - a, c - b}) {
      if (pole <= 0.0 && std::floor(pole) == pole) return 0.0;
    }
    int s1 = 1, s2 = 1, s3 = 1, s4 = 1;
    const double log_value = detail::lgamma_signed(c, &s1) + detail::lgamma_signed(excess, &s2) -
                             detail::lgamma_signed(c - a, &s3) - detail::lgamma_signed(c - b, &s4);
    return s1 * s2 * s3 * s4 * std::exp(log_value);
  }

  CompensatedSum sum;
  sum += 1.0;
  double term = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < max_terms; ++n) {
    const double dn = static_cast<double>(n);
    term *= (a + dn) * (b + dn) / ((c + dn) * (dn + 1.0)) * z;
    if (term == 0.0) return sum.value();
    sum += term;
    const double mag = std::fabs(term);
    if (mag < rel_tol * std::fabs(sum.value()) && mag <= prev) return sum.value();
    prev = mag;
  }
  throw ConvergenceError("gauss_2f1: iteration cap reached");
}

/// Smallest x >= 0 with Gamma(rho+x+a)/Gamma(rho+x) = Gamma(rho+a)/(p0 Gamma(rho)).
///
/// The left-hand side is strictly increasing in x (its log-derivative is
/// Psi(rho+x+a) - Psi(rho+x) > 0), so the root is unique. The root is
/// bracketed by geometric growth from x = 1, then refined by Newton steps on
/// the log equation, falling back to bisection whenever a step leaves the
/// bracket. When p0 is an avoidance probability P0(A), the root is k * mu(A).
inline double solve_avoidance_inverse(double a, double rho, double p0,
                                      const SolverConfig& cfg = {}) {
  if (!(a > 0.0) || !(rho > 0.0)) {
    throw DomainError("solve_avoidance_inverse: a and rho must be positive");
  }
  if (!(p0 > 0.0 && p0 <= 1.0)) throw DomainError("solve_avoidance_inverse: p0 must lie in (0, 1]");
  if (!(cfg.abs_tol > 0.0) || cfg.max_iter < 1 || !(cfg.bracket_growth > 1.0)) {
    throw DomainError("solve_avoidance_inverse: invalid solver configuration");
  }
  const double target = log_rising(rho, a) - std::log(p0);
  auto residual = [&](double x) { return log_rising(rho + x, a) - target; };

  if (residual(0.0) >= 0.0) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  int iter = 0;
  while (residual(hi) < 0.0) {
    lo = hi;
    hi *= cfg.bracket_growth;
    if (++iter > cfg.max_iter || !std::isfinite(hi)) {
      throw ConvergenceError("solve_avoidance_inverse: could not bracket the root");
    }
  }

  double x = 0.5 * (lo + hi);
  for (iter = 0; iter < cfg.max_iter; ++iter) {
    const double f = residual(x);
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double slope = digamma(rho + x + a) - digamma(rho + x);
    double next = x - f / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::fabs(next - x);
    x = next;
    if (step <= cfg.abs_tol * std::fmax(1.0, x) || hi - lo <= cfg.abs_tol * std::fmax(1.0, x)) {
      return x;
    }
  }
  throw ConvergenceError("solve_avoidance_inverse: iteration cap reached");
}

}  // namespace gwp
