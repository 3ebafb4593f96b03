#pragma once

// Univariate and multivariate generalized Waring distributions.
//
// UGWD(a, k; rho) has pmf
//   pi_n = rho_(k) / (rho+a)_(k) * a_(n) k_(n) / (rho+a+k)_(n) / n!
// with x_(r) = Gamma(x+r)/Gamma(x). It is the beta mixture of negative
// binomials X | p ~ NB(k, p), p ~ Beta(rho, a), which the samplers use.
// Factorial moments are descending: E[X(X-1)...(X-r+1)].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gwp/errors.hpp"
#include "gwp/rng.hpp"
#include "gwp/special_functions.hpp"

namespace gwp {

/// Shapes below this are treated as an exact point mass at zero.
inline constexpr double kDegenerateShape = 1e-300;

struct GwdParams {
  double a = 1.0;
  double k = 1.0;
  double rho = 2.0;

  GwdParams() = default;
  GwdParams(double a_, double k_, double rho_) : a(a_), k(k_), rho(rho_) { validate(); }

  void validate() const {
    if (!(a > 0.0) || !(k > 0.0) || !(rho > 0.0) || !std::isfinite(a) || !std::isfinite(k) ||
        !std::isfinite(rho)) {
      throw DomainError("GwdParams: a, k and rho must be positive and finite");
    }
  }

  /// Same (a, rho) with the shape scaled by a measure value.
  [[nodiscard]] GwdParams with_shape(double shape) const {
    GwdParams p;
    p.a = a;
    p.k = shape;
    p.rho = rho;
    if (!(shape >= 0.0) || !std::isfinite(shape)) throw DomainError("GwdParams: shape must be >= 0");
    return p;
  }

  [[nodiscard]] bool degenerate() const noexcept { return k < kDegenerateShape; }

  friend bool operator==(const GwdParams&, const GwdParams&) = default;
};

struct MgwdParams {
  double a = 1.0;
  double rho = 2.0;
  std::vector<double> shapes;

  MgwdParams() = default;
  MgwdParams(double a_, double rho_, std::vector<double> shapes_)
      : a(a_), rho(rho_), shapes(std::move(shapes_)) {
    if (!(a > 0.0) || !(rho > 0.0)) throw DomainError("MgwdParams: a and rho must be positive");
    if (shapes.empty()) throw DomainError("MgwdParams: at least one shape is required");
    for (double s : shapes) {
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("MgwdParams: shapes must be positive");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return shapes.size(); }
  [[nodiscard]] double total_shape() const {
    return std::accumulate(shapes.begin(), shapes.end(), 0.0);
  }
};

// ---------------------------------------------------------------------------
// pmf tables and distances

/// Probabilities on {0, ..., size()-1} plus the mass of everything beyond.
struct PmfTable {
  std::vector<double> probs;
  double tail = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
  [[nodiscard]] double operator[](std::size_t n) const { return probs[n]; }
};

/// Total variation distance, counting the tail as one extra category.
inline double tv_distance(const PmfTable& lhs, const PmfTable& rhs) {
  if (lhs.size() != rhs.size()) throw DimensionError("tv_distance: tables differ in support");
  CompensatedSum sum;
  for (std::size_t i = 0; i < lhs.size(); ++i) sum += std::fabs(lhs.probs[i] - rhs.probs[i]);
  sum += std::fabs(lhs.tail - rhs.tail);
  return std::clamp(0.5 * sum.value(), 0.0, 1.0);
}

/// Relative frequencies of `samples` on {0..max_n}; larger values go to the tail.
template <typename Int>
PmfTable empirical_table(std::span<const Int> samples, std::size_t max_n) {
  PmfTable t;
  t.probs.assign(max_n + 1, 0.0);
  if (samples.empty()) return t;
  std::vector<std::uint64_t> hits(max_n + 1, 0);
  std::uint64_t beyond = 0;
  for (Int v : samples) {
    if (v < 0) throw DomainError("empirical_table: negative count");
    if (static_cast<std::uint64_t>(v) <= max_n) {
      ++hits[static_cast<std::size_t>(v)];
    } else {
      ++beyond;
    }
  }
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i <= max_n; ++i) t.probs[i] = static_cast<double>(hits[i]) / n;
  t.tail = static_cast<double>(beyond) / n;
  return t;
}

template <typename Int>
PmfTable empirical_table(const std::vector<Int>& samples, std::size_t max_n) {
  return empirical_table(std::span<const Int>(samples), max_n);
}

// ---------------------------------------------------------------------------
// Univariate evaluation

/// ln pi_0. The four log-gamma terms are combined in an order that is
/// invariant under swapping a and k, so the result is bit-symmetric.
inline double ugwd_log_p0(const GwdParams& p) {
  if (p.degenerate()) return 0.0;
  const double ak = p.a + p.k;
  return (log_gamma(p.rho + p.k) + log_gamma(p.rho + p.a)) -
         (log_gamma(p.rho) + log_gamma(p.rho + ak));
}

inline double ugwd_log_pmf(const GwdParams& p, std::int64_t n) {
  if (n < 0) return -std::numeric_limits<double>::infinity();
  if (p.degenerate()) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (n == 0) return ugwd_log_p0(p);
  const double dn = static_cast<double>(n);
  const double ak = p.a + p.k;
  return ugwd_log_p0(p) + (log_rising(p.a, dn) + log_rising(p.k, dn)) -
         log_rising(p.rho + ak, dn) - log_gamma(dn + 1.0);
}

inline double ugwd_pmf(const GwdParams& p, std::int64_t n) { return std::exp(ugwd_log_pmf(p, n)); }

/// pi_{n+1} / pi_n.
inline double ugwd_ratio(const GwdParams& p, double n) {
  return (p.a + n) * (p.k + n) / ((p.rho + (p.a + p.k) + n) * (n + 1.0));
}

/// Estimate of P(X > n) from pi_{n+1}, using the two leading terms of the
/// tail expansion P(X >= m) = pi_m * (m/rho + (rho+a)(rho+k)/(rho(rho+1)) + O(1/m)).
inline double ugwd_tail_estimate(const GwdParams& p, double n, double pi_next) {
  const double m = n + 1.0;
  return pi_next * (m / p.rho + (p.rho + p.a) * (p.rho + p.k) / (p.rho * (p.rho + 1.0)));
}

/// pmf on {0..max_n} by the exact term ratio; the table tail is 1 - sum.
inline PmfTable ugwd_pmf_table(const GwdParams& p, std::size_t max_n) {
  PmfTable t;
  t.probs.resize(max_n + 1, 0.0);
  if (p.degenerate()) {
    t.probs[0] = 1.0;
    return t;
  }
  CompensatedSum sum;
  double term = std::exp(ugwd_log_p0(p));
  for (std::size_t n = 0; n <= max_n; ++n) {
    t.probs[n] = term;
    sum += term;
    term *= ugwd_ratio(p, static_cast<double>(n));
  }
  t.tail = std::max(0.0, 1.0 - sum.value());
  return t;
}

inline constexpr std::int64_t kDefaultTermCap = 10'000'000;

/// Smallest N whose estimated tail mass P(X > N) is below `tol`, capped at `cap`.
inline std::int64_t ugwd_support_bound(const GwdParams& p, double tol = 1e-9,
                                       std::int64_t cap = kDefaultTermCap) {
  if (p.degenerate()) return 0;
  double term = std::exp(ugwd_log_p0(p));
  for (std::int64_t n = 0; n < cap; ++n) {
    const double next = term * ugwd_ratio(p, static_cast<double>(n));
    if (ugwd_tail_estimate(p, static_cast<double>(n), next) < tol) return n;
    term = next;
  }
  return cap;
}

inline double ugwd_cdf(const GwdParams& p, std::int64_t n) {
  if (n < 0) return 0.0;
  if (p.degenerate()) return 1.0;
  CompensatedSum sum;
  double term = std::exp(ugwd_log_p0(p));
  for (std::int64_t i = 0; i <= n; ++i) {
    sum += term;
    const double next = term * ugwd_ratio(p, static_cast<double>(i));
    if (next == 0.0 || ugwd_tail_estimate(p, static_cast<double>(i), next) <
                           std::numeric_limits<double>::epsilon() * 0.25) {
      break;
    }
    term = next;
  }
  return std::min(1.0, sum.value());
}

/// Smallest n with cdf(n) >= q.
inline std::int64_t ugwd_quantile(const GwdParams& p, double q,
                                  std::int64_t cap = kDefaultTermCap) {
  if (!(q >= 0.0 && q < 1.0)) throw DomainError("ugwd_quantile: q must lie in [0, 1)");
  if (q == 0.0 || p.degenerate()) return 0;
  CompensatedSum sum;
  double term = std::exp(ugwd_log_p0(p));
  for (std::int64_t n = 0; n < cap; ++n) {
    sum += term;
    if (sum.value() >= q) return n;
    term *= ugwd_ratio(p, static_cast<double>(n));
  }
  throw QuantileOverflowError("ugwd_quantile: term cap reached before the requested quantile");
}

// ---------------------------------------------------------------------------
// Moments

/// E[X(X-1)...(X-r+1)] = a_(r) k_(r) / ((rho-1)...(rho-r)).
inline double ugwd_factorial_moment(const GwdParams& p, int r) {
  if (r < 0) throw DomainError("ugwd_factorial_moment: order must be nonnegative");
  if (!(p.rho > r)) {
    throw InfiniteMomentError("factorial moment of order " + std::to_string(r) +
                              " is infinite for rho <= " + std::to_string(r));
  }
  double value = 1.0;
  for (int i = 0; i < r; ++i) value *= (p.a + i) * (p.k + i) / (p.rho - 1.0 - i);
  return value;
}

inline double ugwd_mean(const GwdParams& p) {
  if (!(p.rho > 1.0)) throw InfiniteMomentError("mean is infinite for rho <= 1");
  return p.a * p.k / (p.rho - 1.0);
}

inline double ugwd_variance(const GwdParams& p) {
  if (!(p.rho > 2.0)) throw InfiniteMomentError("variance is infinite for rho <= 2");
  const double r1 = p.rho - 1.0;
  return p.k * p.a * (p.rho + p.a - 1.0) * (p.rho + p.k - 1.0) / (r1 * r1 * (p.rho - 2.0));
}

struct GwdMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline GwdMoments ugwd_moments(const GwdParams& p) { return {ugwd_mean(p), ugwd_variance(p)}; }

/// E[z^X] = rho_(k)/(rho+a)_(k) * 2F1(a, k; rho+a+k; z).
inline double ugwd_pgf(const GwdParams& p, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("ugwd_pgf: z must lie in [0, 1]");
  if (p.degenerate()) return 1.0;
  return std::exp(ugwd_log_p0(p)) * gauss_2f1(p.a, p.k, p.rho + p.a + p.k, z);
}

// ---------------------------------------------------------------------------
// Multivariate evaluation

inline double mgwd_log_pmf(const MgwdParams& p, std::span<const std::int64_t> x) {
  if (x.size() != p.size()) throw DimensionError("mgwd_log_pmf: x must have one entry per shape");
  double total_x = 0.0;
  double product = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0) return -std::numeric_limits<double>::infinity();
    const double xi = static_cast<double>(x[i]);
    total_x += xi;
    product += log_rising(p.shapes[i], xi) - log_gamma(xi + 1.0);
  }
  const double total_k = p.total_shape();
  return log_rising(p.rho, total_k) + log_rising(p.a, total_x) -
         log_rising(p.rho + p.a, total_k + total_x) + product;
}

inline double mgwd_log_pmf(const MgwdParams& p, const std::vector<std::int64_t>& x) {
  return mgwd_log_pmf(p, std::span<const std::int64_t>(x));
}

/// E[prod_i X_i(X_i-1)...(X_i-r_i+1)] = a_(R) prod (k_i)_(r_i) / ((rho-1)...(rho-R)).
inline double mgwd_factorial_moment(const MgwdParams& p, std::span<const int> orders) {
  if (orders.size() != p.size()) throw DimensionError("mgwd_factorial_moment: one order per shape");
  int total = 0;
  double value = 1.0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] < 0) throw DomainError("mgwd_factorial_moment: orders must be nonnegative");
    for (int j = 0; j < orders[i]; ++j) value *= p.shapes[i] + j;
    total += orders[i];
  }
  if (!(p.rho > total)) {
    throw InfiniteMomentError("factorial moment of total order " + std::to_string(total) +
                              " is infinite");
  }
  for (int j = 0; j < total; ++j) value *= (p.a + j) / (p.rho - 1.0 - j);
  return value;
}

inline double mgwd_factorial_moment(const MgwdParams& p, const std::vector<int>& orders) {
  return mgwd_factorial_moment(p, std::span<const int>(orders));
}

struct MgwdMoments {
  std::vector<double> means;
  std::vector<double> variances;
  /// E[X_i X_j]; the diagonal holds E[X_i^2].
  std::vector<std::vector<double>> cross_moments;
  std::vector<std::vector<double>> covariances;
};

inline MgwdMoments mgwd_moments(const MgwdParams& p) {
  if (!(p.rho > 2.0)) throw InfiniteMomentError("mgwd_moments: second moments need rho > 2");
  const std::size_t s = p.size();
  const double r1 = p.rho - 1.0;
  const double r2 = p.rho - 2.0;
  MgwdMoments m;
  m.means.resize(s);
  m.variances.resize(s);
  m.cross_moments.assign(s, std::vector<double>(s));
  m.covariances.assign(s, std::vector<double>(s));
  for (std::size_t i = 0; i < s; ++i) {
    const GwdParams mi(p.a, p.shapes[i], p.rho);
    m.means[i] = ugwd_mean(mi);
    m.variances[i] = ugwd_variance(mi);
  }
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (i == j) {
        m.covariances[i][i] = m.variances[i];
        m.cross_moments[i][i] = m.variances[i] + m.means[i] * m.means[i];
      } else {
        const double kk = p.shapes[i] * p.shapes[j];
        m.cross_moments[i][j] = p.a * (p.a + 1.0) * kk / (r1 * r2);
        m.covariances[i][j] = p.a * (p.rho + p.a - 1.0) * kk / (r1 * r1 * r2);
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Sampling

/// Poisson count given the shared mixing draw: X ~ Poisson(theta * Gamma(shape)).
template <typename URBG>
std::int64_t sample_given_mixing(URBG& rng, const MixingDraw& mix, double shape) {
  if (shape < kDegenerateShape) return 0;
  const double log_rate = mix.log_theta + log_gamma_variate(rng, shape);
  return poisson_variate(rng, std::exp(log_rate));
}

template <typename URBG>
std::int64_t sample_ugwd(const GwdParams& p, URBG& rng) {
  if (p.degenerate()) return 0;
  const MixingDraw mix = draw_mixing(rng, p.rho, p.a);
  return sample_given_mixing(rng, mix, p.k);
}

template <typename URBG>
std::vector<std::int64_t> sample_mgwd(const MgwdParams& p, URBG& rng) {
  const MixingDraw mix = draw_mixing(rng, p.rho, p.a);
  std::vector<std::int64_t> x(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) x[i] = sample_given_mixing(rng, mix, p.shapes[i]);
  return x;
}

/// Dirichlet-multinomial split of `total` over cells with the given weights.
/// Dirichlet proportions come from log-gamma variates normalized by their
/// maximum; counts follow by sequential binomial thinning.
template <typename URBG>
std::vector<std::int64_t> conditional_allocation(std::int64_t total, std::span<const double> weights,
                                                 URBG& rng) {
  if (weights.empty()) throw DomainError("conditional_allocation: weights must be nonempty");
  if (total < 0) throw DomainError("conditional_allocation: total must be nonnegative");
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("conditional_allocation: weights must be positive");
  }
  std::vector<std::int64_t> counts(weights.size(), 0);
  if (total == 0) return counts;
  if (weights.size() == 1) {
    counts[0] = total;
    return counts;
  }

  std::vector<double> share(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) share[i] = log_gamma_variate(rng, weights[i]);
  const double top = *std::max_element(share.begin(), share.end());
  for (double& s : share) s = std::exp(s - top);

  // Suffix sums give the mass still unallocated before each cell.
  std::vector<double> remaining_mass(share.size() + 1, 0.0);
  for (std::size_t i = share.size(); i-- > 0;) remaining_mass[i] = remaining_mass[i + 1] + share[i];

  std::int64_t left = total;
  for (std::size_t i = 0; i + 1 < share.size() && left > 0; ++i) {
    const double prob = std::clamp(share[i] / remaining_mass[i], 0.0, 1.0);
    counts[i] = binomial_variate(rng, left, prob);
    left -= counts[i];
  }
  counts.back() += left;
  return counts;
}

template <typename URBG>
std::vector<std::int64_t> conditional_allocation(std::int64_t total, const std::vector<double>& weights,
                                                 URBG& rng) {
  return conditional_allocation(total, std::span<const double>(weights), rng);
}

}  // namespace gwp
