#pragma once

// Reference count processes, limiting-case experiments and moment fitting.
//
//   Polya          one Lambda ~ Gamma(alpha, scale beta); cells Poisson(Lambda mu(A))
//   cluster NB     per cell Poisson(lambda mu(A)) clusters of logarithmic-series size
//   Poisson        independent Poisson(intensity mu(A))
//
// The NB limit of the GW process (k -> inf, rho = c k) is the Polya marginal
// with alpha = a, beta = 1/c.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gwp/errors.hpp"
#include "gwp/gwd.hpp"
#include "gwp/process.hpp"
#include "gwp/rng.hpp"
#include "gwp/special_functions.hpp"

namespace gwp {

struct PolyaParams {
  double alpha = 1.0;
  double beta = 1.0;

  PolyaParams() = default;
  PolyaParams(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("PolyaParams: alpha and beta must be positive");
  }
};

struct ClusterNbParams {
  double lambda = 1.0;
  double delta = 1.0;

  ClusterNbParams() = default;
  ClusterNbParams(double lambda_, double delta_) : lambda(lambda_), delta(delta_) {
    if (!(lambda > 0.0) || !(delta > 0.0)) {
      throw DomainError("ClusterNbParams: lambda and delta must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Reference pmf tables

/// NB(shape r, success probability p): pi_n = (r)_(n)/n! p^r (1-p)^n.
inline PmfTable nb_pmf_table(double shape, double success, std::size_t max_n) {
  if (!(shape > 0.0) || !(success > 0.0 && success <= 1.0)) {
    throw DomainError("nb_pmf_table: need shape > 0 and success in (0, 1]");
  }
  PmfTable t;
  t.probs.assign(max_n + 1, 0.0);
  CompensatedSum sum;
  double term = std::exp(shape * std::log(success));
  const double fail = 1.0 - success;
  for (std::size_t n = 0; n <= max_n; ++n) {
    t.probs[n] = term;
    sum += term;
    const double dn = static_cast<double>(n);
    term *= (shape + dn) / (dn + 1.0) * fail;
  }
  t.tail = std::max(0.0, 1.0 - sum.value());
  return t;
}

inline PmfTable poisson_pmf_table(double mean, std::size_t max_n) {
  if (!(mean >= 0.0)) throw DomainError("poisson_pmf_table: mean must be nonnegative");
  PmfTable t;
  t.probs.assign(max_n + 1, 0.0);
  if (mean == 0.0) {
    t.probs[0] = 1.0;
    return t;
  }
  CompensatedSum sum;
  for (std::size_t n = 0; n <= max_n; ++n) {
    const double dn = static_cast<double>(n);
    t.probs[n] = std::exp(dn * std::log(mean) - mean - log_gamma(dn + 1.0));
    sum += t.probs[n];
  }
  t.tail = std::max(0.0, 1.0 - sum.value());
  return t;
}

/// Pgf of the Polya count on a set of measure `volume`: (1 + beta mu (1 - z))^-alpha.
inline double polya_pgf(const PolyaParams& p, double volume, double z) {
  return std::pow(1.0 + p.beta * volume * (1.0 - z), -p.alpha);
}

inline PmfTable polya_pmf_table(const PolyaParams& p, double volume, std::size_t max_n) {
  return nb_pmf_table(p.alpha, 1.0 / (1.0 + p.beta * volume), max_n);
}

/// Pgf of the cluster NB count: (1 + delta (1 - z))^(-lambda mu / ln(1 + delta)).
inline double cluster_nb_pgf(const ClusterNbParams& p, double volume, double z) {
  return std::pow(1.0 + p.delta * (1.0 - z), -p.lambda * volume / std::log1p(p.delta));
}

inline double cluster_nb_mean(const ClusterNbParams& p, double volume) {
  return p.lambda * volume * p.delta / std::log1p(p.delta);
}

/// P(N(A) >= 2 | N(A) >= 1). Tends to 1 - delta / ((1 + delta) ln(1 + delta))
/// as the volume shrinks, the signature of coincident points.
inline double cluster_nb_multiplicity_ratio(const ClusterNbParams& p, double volume) {
  const double m = p.lambda * volume;
  const double theta = p.delta / (1.0 + p.delta);
  const double p1 = m * std::exp(-m) * theta / std::log1p(p.delta);
  return 1.0 - p1 / -std::expm1(-m);
}

// ---------------------------------------------------------------------------
// Samplers

/// Logarithmic-series variate with P(X = j) = theta^j / (j ln(1 + delta)),
/// theta = delta / (1 + delta), by inversion against a cached cdf table.
class LogSeriesSampler {
 public:
  explicit LogSeriesSampler(double delta, std::size_t max_table = 1u << 20) : delta_(delta) {
    if (!(delta > 0.0)) throw DomainError("LogSeriesSampler: delta must be positive");
    theta_ = delta / (1.0 + delta);
    norm_ = std::log1p(delta);
    double power = 1.0;
    CompensatedSum cdf;
    for (std::size_t j = 1; j <= max_table; ++j) {
      power *= theta_;
      cdf += power / (static_cast<double>(j) * norm_);
      cdf_.push_back(cdf.value());
      if (cdf.value() >= 1.0 - 1e-16 || power == 0.0) break;
    }
  }

  template <typename URBG>
  std::int64_t operator()(URBG& rng) const {
    const double u = uniform_open01(rng);
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it != cdf_.end()) return static_cast<std::int64_t>(it - cdf_.begin()) + 1;
    // Past the table: continue the series term by term.
    std::size_t j = cdf_.size();
    double cum = cdf_.back();
    double power = std::pow(theta_, static_cast<double>(j));
    while (cum < u) {
      ++j;
      power *= theta_;
      const double term = power / (static_cast<double>(j) * norm_);
      if (term == 0.0) break;
      cum += term;
    }
    return static_cast<std::int64_t>(j);
  }

  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] std::size_t table_size() const noexcept { return cdf_.size(); }

 private:
  double delta_;
  double theta_ = 0.0;
  double norm_ = 1.0;
  std::vector<double> cdf_;
};

template <typename URBG>
CountField simulate_polya_counts(const PolyaParams& p, const QuadratGrid& grid, URBG& rng) {
  const double lambda = gamma_variate(rng, p.alpha, p.beta);
  CountField f{grid, std::vector<std::int64_t>(grid.num_cells()), CountMeta{}};
  for (auto& c : f.counts) c = poisson_variate(rng, lambda * grid.cell_volume());
  f.meta.model = "polya";
  return f;
}

template <typename URBG>
CountField simulate_cluster_nb_counts(const ClusterNbParams& p, const QuadratGrid& grid, URBG& rng) {
  const LogSeriesSampler cluster_size(p.delta);
  CountField f{grid, std::vector<std::int64_t>(grid.num_cells()), CountMeta{}};
  const double mean_clusters = p.lambda * grid.cell_volume();
  for (auto& c : f.counts) {
    const std::int64_t clusters = poisson_variate(rng, mean_clusters);
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < clusters; ++i) n += cluster_size(rng);
    c = n;
  }
  f.meta.model = "cluster_nb";
  return f;
}

template <typename URBG>
CountField simulate_poisson_counts(double intensity, const QuadratGrid& grid, URBG& rng) {
  if (!(intensity > 0.0)) throw DomainError("simulate_poisson_counts: intensity must be positive");
  CountField f{grid, std::vector<std::int64_t>(grid.num_cells()), CountMeta{}};
  for (auto& c : f.counts) c = poisson_variate(rng, intensity * grid.cell_volume());
  f.meta.model = "poisson";
  return f;
}

// ---------------------------------------------------------------------------
// Limit curves

struct LimitPoint {
  double param = 0.0;
  double tv_distance = 0.0;
};

namespace detail {

inline void check_increasing(std::span<const double> values, const char* what) {
  if (values.empty()) throw DomainError(std::string(what) + ": no values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || (i > 0 && !(values[i] > values[i - 1]))) {
      throw DomainError(std::string(what) + ": values must be positive and increasing");
    }
  }
}

/// Support bound at which a table's remaining mass is negligible.
inline std::size_t support_until(const PmfTable& t, double tol) {
  CompensatedSum sum;
  for (std::size_t n = 0; n < t.size(); ++n) {
    sum += t.probs[n];
    if (1.0 - sum.value() < tol) return n;
  }
  return t.size() - 1;
}

}  // namespace detail

inline constexpr std::size_t kLimitSupportCap = 2'000'000;

/// TV between UGWD(a, k mu; c k) and its NB limit with pgf (1 + mu (1 - z)/c)^-a.
inline std::vector<LimitPoint> nb_limit_curve(double a, double c, double volume,
                                              std::span<const double> k_values) {
  if (!(a > 0.0) || !(c > 0.0) || !(volume > 0.0)) {
    throw DomainError("nb_limit_curve: a, c and volume must be positive");
  }
  detail::check_increasing(k_values, "nb_limit_curve");
  std::vector<LimitPoint> out;
  for (double k : k_values) {
    const GwdParams gwd(a, k * volume, c * k);
    const auto bound = static_cast<std::size_t>(ugwd_support_bound(gwd, 1e-13, kLimitSupportCap));
    const PmfTable nb_probe = nb_pmf_table(a, c / (c + volume), kLimitSupportCap);
    const std::size_t n = std::max(bound, detail::support_until(nb_probe, 1e-15));
    out.push_back({k, tv_distance(ugwd_pmf_table(gwd, n), nb_pmf_table(a, c / (c + volume), n))});
  }
  return out;
}

inline std::vector<LimitPoint> nb_limit_curve(double a, double c, double volume,
                                              const std::vector<double>& k_values) {
  return nb_limit_curve(a, c, volume, std::span<const double>(k_values));
}

/// TV between NB with pgf (1 + mu (1 - z)/c)^(-lambda c) and Poisson(lambda mu).
inline std::vector<LimitPoint> poisson_limit_curve(double lambda, double volume,
                                                   std::span<const double> c_values) {
  if (!(lambda >= 0.0) || !(volume > 0.0)) {
    throw DomainError("poisson_limit_curve: need lambda >= 0 and volume > 0");
  }
  detail::check_increasing(c_values, "poisson_limit_curve");
  std::vector<LimitPoint> out;
  for (double c : c_values) {
    if (lambda == 0.0) {
      out.push_back({c, 0.0});
      continue;
    }
    const double mean = lambda * volume;
    // Both laws have mean lambda mu and variance at most lambda mu (1 + mu / c).
    const double sd = std::sqrt(mean * (1.0 + volume / c));
    std::size_t n = static_cast<std::size_t>(std::ceil(mean + 60.0 * sd + 60.0));
    n = std::min(n, kLimitSupportCap);
    out.push_back({c, tv_distance(nb_pmf_table(lambda * c, c / (c + volume), n),
                                  poisson_pmf_table(mean, n))});
  }
  return out;
}

inline std::vector<LimitPoint> poisson_limit_curve(double lambda, double volume,
                                                   const std::vector<double>& c_values) {
  return poisson_limit_curve(lambda, volume, std::span<const double>(c_values));
}

// ---------------------------------------------------------------------------
// Moment fitting

struct FitResult {
  double a_hat = std::numeric_limits<double>::quiet_NaN();
  double k_hat = std::numeric_limits<double>::quiet_NaN();
  double rho_hat = std::numeric_limits<double>::quiet_NaN();
  /// Sample mean and descending factorial moments of orders 2 and 3.
  std::array<double, 3> matched_moments{};
  bool canonical = false;
  bool converged = false;
  std::size_t sample_size = 0;
  double volume = 1.0;
  std::string message;
};

inline constexpr std::size_t kMinFitSample = 1000;

/// Matches the sample mean m1 and factorial moments F2, F3 to
///   m1 = a K / u,  F2 = a K (a+1)(K+1) / (u (u-1)),  F3 = F2 (a+2)(K+2) / (u-2)
/// with K = k * volume and u = rho - 1. With P = aK and S = a + K these give
/// P = m1 u, P + S + 1 = F2 (u-1) / m1 and P + 2S + 4 = F3 (u-2) / F2, which
/// is linear in u. (a, K) are then the roots of t^2 - S t + P, returned with
/// a <= K since the law is symmetric in a and K.
///
/// Sums are accumulated exactly in 128-bit integers, so the result depends
/// only on the sample's multiset of values.
inline FitResult fit_moments(std::span<const std::int64_t> counts, double volume) {
  if (!(volume > 0.0)) throw DomainError("fit_moments: volume must be positive");
  if (counts.size() < kMinFitSample) {
    throw InsufficientSampleError("fit_moments: need at least " + std::to_string(kMinFitSample) +
                                  " observations");
  }
  constexpr std::int64_t kMaxCount = std::int64_t{1} << 40;
  __int128 s1 = 0, s2 = 0, s3 = 0;
  for (std::int64_t x : counts) {
    if (x < 0 || x > kMaxCount) throw DomainError("fit_moments: counts must lie in [0, 2^40]");
    const __int128 v = x;
    s1 += v;
    s2 += v * (v - 1);
    s3 += v * (v - 1) * (v - 2);
  }
  const auto n = static_cast<long double>(counts.size());
  const double m1 = static_cast<double>(static_cast<long double>(s1) / n);
  const double f2 = static_cast<double>(static_cast<long double>(s2) / n);
  const double f3 = static_cast<double>(static_cast<long double>(s3) / n);

  FitResult r;
  r.matched_moments = {m1, f2, f3};
  r.sample_size = counts.size();
  r.volume = volume;

  auto fail = [&r](std::string why) {
    r.converged = false;
    r.message = std::move(why);
    return r;
  };
  if (!(m1 > 0.0) || !(f2 > 0.0) || !(f3 > 0.0)) return fail("sample factorial moments must be positive");

  const double g2 = f2 / m1;
  const double g3 = f3 / f2;
  const double denom = 2.0 * g2 - m1 - g3;
  const double numer = 2.0 * g2 - 2.0 - 2.0 * g3;
  if (denom == 0.0) return fail("moment system is singular (Poisson-like sample)");
  const double u = numer / denom;
  if (!std::isfinite(u)) return fail("moment system is singular (Poisson-like sample)");
  r.rho_hat = u + 1.0;
  if (!(u > 2.0)) return fail("implied rho <= 3: third moment would be infinite");

  const double prod = m1 * u;
  const double sum = g2 * (u - 1.0) - 1.0 - prod;
  const double disc = sum * sum - 4.0 * prod;
  if (!(prod > 0.0) || !(sum > 0.0) || !(disc >= 0.0)) {
    return fail("no positive real (a, k) pair matches the sample moments");
  }
  // Stable quadratic roots.
  const double big = 0.5 * (sum + std::sqrt(disc));
  const double small = prod / big;
  if (!(small > 0.0)) return fail("no positive real (a, k) pair matches the sample moments");

  r.a_hat = small;
  r.k_hat = big / volume;
  r.canonical = true;
  r.converged = true;
  r.message = "ok";
  return r;
}

inline FitResult fit_moments(const std::vector<std::int64_t>& counts, double volume) {
  return fit_moments(std::span<const std::int64_t>(counts), volume);
}

}  // namespace gwp
