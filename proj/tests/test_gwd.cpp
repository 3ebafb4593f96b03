#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gwp/gwd.hpp"
#include "gwp/rng.hpp"
#include "oracles.hpp"

using namespace gwp;

namespace {

std::vector<std::int64_t> draw(const GwdParams& p, std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<std::int64_t> out(n);
  for (auto& x : out) x = sample_ugwd(p, rng);
  return out;
}

}  // namespace

TEST(UgwdPmf, Examples) {
  const GwdParams p(1, 1, 2);
  EXPECT_NEAR(ugwd_log_pmf(p, 0), std::log(2.0 / 3.0), 1e-14);
  EXPECT_NEAR(ugwd_log_pmf(p, 1), std::log(1.0 / 6.0), 1e-14);
  for (std::int64_t n = 0; n < 60; ++n) {
    EXPECT_NEAR(ugwd_log_pmf(GwdParams(2, 5, 3), n), ugwd_log_pmf(GwdParams(5, 2, 3), n), 1e-12);
  }
}

TEST(UgwdPmf, MatchesDirectFormula) {
  for (double a : {0.3, 1.0, 4.5}) {
    for (double k : {0.2, 2.0, 250.0}) {
      for (double rho : {0.5, 3.0, 40.0}) {
        const GwdParams p(a, k, rho);
        for (std::int64_t n : {0, 1, 2, 7, 50, 400}) {
          const double expect = oracle::gwd_pmf(a, k, rho, n);
          EXPECT_NEAR(ugwd_pmf(p, n), expect, 1e-11 * expect + 1e-300) << a << " " << k << " " << rho << " " << n;
        }
      }
    }
  }
}

TEST(UgwdPmf, BetaNegativeBinomialRepresentation) {
  for (const GwdParams& p : {GwdParams(2, 3, 4), GwdParams(0.7, 1.4, 2.5), GwdParams(1, 1, 2)}) {
    const PmfTable table = ugwd_pmf_table(p, 200);
    PmfTable mixture;
    for (std::int64_t n = 0; n <= 200; ++n) mixture.probs.push_back(oracle::beta_nb_mixture_pmf(p.a, p.k, p.rho, n));
    mixture.tail = table.tail;
    EXPECT_LT(tv_distance(table, mixture), 1e-10);
  }
}

TEST(UgwdPmf, RecurrenceIdentity) {
  for (double a : {0.4, 2.0, 9.0}) {
    for (double k : {0.5, 3.0, 70.0}) {
      for (double rho : {0.6, 2.5, 12.0}) {
        const GwdParams p(a, k, rho);
        for (std::int64_t n = 0; n < 100; n += 7) {
          const double ratio = std::exp(ugwd_log_pmf(p, n + 1) - ugwd_log_pmf(p, n));
          EXPECT_NEAR(ratio, (a + n) * (k + n) / ((rho + a + k + n) * (n + 1.0)), 1e-12);
        }
      }
    }
  }
}

TEST(UgwdPmf, AdaptiveNormalization) {
  for (double rho : {0.5, 2.0, 6.0}) {
    for (double a : {0.5, 3.0}) {
      const GwdParams p(a, 1.5, rho);
      const std::int64_t n = ugwd_support_bound(p);
      const PmfTable t = ugwd_pmf_table(p, static_cast<std::size_t>(n));
      CompensatedSum s;
      for (double v : t.probs) s += v;
      const double est = ugwd_tail_estimate(p, static_cast<double>(n), ugwd_pmf(p, n + 1));
      EXPECT_LT(std::fabs(1.0 - (s.value() + est)), 1e-9) << rho << " " << a << " N=" << n;
      // The truncated sum itself agrees with the brute-force lgamma sum.
      EXPECT_NEAR(s.value(), static_cast<double>(oracle::gwd_brute_force_mass(p.a, p.k, p.rho, n + 1)), 1e-11);
    }
  }
}

TEST(UgwdCdf, Examples) {
  const GwdParams p(1, 1, 2);
  EXPECT_NEAR(ugwd_cdf(p, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(ugwd_cdf(p, 1), 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(ugwd_cdf(GwdParams(2, 3, 8), 100000), 1.0, 1e-12);
  EXPECT_EQ(ugwd_cdf(p, -1), 0.0);
}

TEST(UgwdQuantile, Examples) {
  const GwdParams p(1, 1, 2);
  EXPECT_EQ(ugwd_quantile(p, 0.5), 0);
  EXPECT_EQ(ugwd_quantile(p, 0.7), 1);
  EXPECT_EQ(ugwd_quantile(p, 0.0), 0);
  EXPECT_THROW(ugwd_quantile(p, 1.0), DomainError);
  EXPECT_THROW(ugwd_quantile(GwdParams(1, 1, 0.2), 0.999999, 1000), QuantileOverflowError);
}

TEST(UgwdMoments, Examples) {
  EXPECT_DOUBLE_EQ(ugwd_mean(GwdParams(1, 1, 2)), 1.0);
  EXPECT_DOUBLE_EQ(ugwd_variance(GwdParams(1, 1, 3)), 9.0 / 4.0);
  EXPECT_DOUBLE_EQ(ugwd_factorial_moment(GwdParams(1, 1, 3), 2), 2.0);
  EXPECT_THROW(ugwd_factorial_moment(GwdParams(1, 1, 2), 2), InfiniteMomentError);
  EXPECT_THROW(ugwd_mean(GwdParams(1, 1, 1)), InfiniteMomentError);
  EXPECT_THROW(ugwd_variance(GwdParams(1, 1, 2)), InfiniteMomentError);
}

TEST(UgwdMoments, VarianceIdentity) {
  for (double a : {0.3, 1.0, 2.5, 7.0}) {
    for (double k : {0.4, 1.0, 3.0, 11.0}) {
      for (double rho : {2.2, 3.0, 5.5, 20.0}) {
        const GwdParams p(a, k, rho);
        const double m = ugwd_mean(p);
        const double via_factorial = ugwd_factorial_moment(p, 2) + m - m * m;
        EXPECT_NEAR(via_factorial, ugwd_variance(p), 1e-10 * ugwd_variance(p));
      }
    }
  }
}

TEST(UgwdMoments, FactorialMomentMatchesPmfSum) {
  // rho = 9 leaves a tail of order n^-6 for the order-2 summand.
  const GwdParams p(1.5, 2.0, 9.0);
  const PmfTable t = ugwd_pmf_table(p, 200000);
  CompensatedSum f2;
  for (std::size_t n = 2; n < t.size(); ++n) f2 += static_cast<double>(n) * (n - 1.0) * t.probs[n];
  EXPECT_NEAR(f2.value(), ugwd_factorial_moment(p, 2), 1e-9);
}

TEST(UgwdPgf, Examples) {
  const GwdParams p(1, 1, 2);
  EXPECT_NEAR(ugwd_pgf(p, 1.0), 1.0, 1e-14);
  EXPECT_NEAR(ugwd_pgf(p, 0.0), 2.0 / 3.0, 1e-15);
  double series = 0.0;
  for (std::int64_t n = 0; n < 200; ++n) series += oracle::gwd_pmf(1, 1, 2, n) * std::pow(0.5, n);
  EXPECT_NEAR(ugwd_pgf(p, 0.5), series, 1e-10);
  EXPECT_THROW(ugwd_pgf(p, 1.5), DomainError);
}

TEST(Degenerate, TinyShapeIsPointMassAtZero) {
  const GwdParams base(2, 1, 3);
  const GwdParams p = base.with_shape(1e-320);
  EXPECT_EQ(ugwd_pmf(p, 0), 1.0);
  EXPECT_EQ(ugwd_pmf(p, 3), 0.0);
  Rng rng = make_stream(1, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_ugwd(p, rng), 0);
}

TEST(Params, Validation) {
  EXPECT_THROW(GwdParams(0, 1, 1), DomainError);
  EXPECT_THROW(GwdParams(1, -1, 1), DomainError);
  EXPECT_THROW(GwdParams(1, 1, NAN), DomainError);
  EXPECT_THROW(MgwdParams(1, 2, {}), DomainError);
  EXPECT_THROW(MgwdParams(1, 2, {1.0, 0.0}), DomainError);
}

TEST(TvDistance, Examples) {
  const PmfTable a{{0.5, 0.5}, 0.0};
  const PmfTable b{{0.75, 0.25}, 0.0};
  EXPECT_EQ(tv_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(a, b), 0.25);
  EXPECT_DOUBLE_EQ(tv_distance(PmfTable{{1.0, 0.0}, 0.0}, PmfTable{{0.0, 1.0}, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(PmfTable{{1.0}, 0.0}, PmfTable{{0.0}, 1.0}), 1.0);
  EXPECT_THROW(tv_distance(a, PmfTable{{1.0}, 0.0}), DimensionError);
}

TEST(Mgwd, Examples) {
  const MgwdParams p(1, 2, {1, 1});
  EXPECT_NEAR(mgwd_log_pmf(p, {0, 0}), std::log(0.5), 1e-14);
  EXPECT_NEAR(std::exp(mgwd_log_pmf(p, {0, 0})), ugwd_pmf(GwdParams(1, 2, 2), 0), 1e-14);
  for (std::int64_t n = 0; n < 30; ++n) {
    EXPECT_NEAR(mgwd_log_pmf(MgwdParams(1.3, 2.2, {0.7}), {n}), ugwd_log_pmf(GwdParams(1.3, 0.7, 2.2), n), 1e-13);
  }
  EXPECT_THROW(mgwd_log_pmf(p, {1}), DimensionError);
}

TEST(Mgwd, MatchesDirectFormula) {
  const std::vector<double> k{0.4, 1.7, 3.0};
  const MgwdParams p(2.2, 3.5, k);
  for (std::int64_t i = 0; i < 6; ++i) {
    for (std::int64_t j = 0; j < 6; ++j) {
      const std::vector<std::int64_t> x{i, j, i + j};
      EXPECT_NEAR(std::exp(mgwd_log_pmf(p, x)), oracle::mgwd_pmf(2.2, 3.5, k, x), 1e-13);
    }
  }
}

TEST(Mgwd, FiniteAdditivity) {
  for (const auto& [k1, k2] : {std::pair{1.0, 1.0}, std::pair{0.3, 2.6}, std::pair{5.0, 0.5}}) {
    const MgwdParams p(1.7, 2.4, {k1, k2});
    const GwdParams sum(1.7, k1 + k2, 2.4);
    for (std::int64_t n = 0; n <= 20; ++n) {
      CompensatedSum s;
      for (std::int64_t x1 = 0; x1 <= n; ++x1) s += std::exp(mgwd_log_pmf(p, {x1, n - x1}));
      EXPECT_NEAR(s.value(), ugwd_pmf(sum, n), 1e-12);
    }
  }
}

TEST(Mgwd, CountableAdditivityDeskCheck) {
  // Shapes 2^-j, j = 1..20: aggregates of the first J components approach
  // the law with the full shape sum monotonically in TV.
  const double a = 1.5, rho = 3.0;
  double full = 0.0;
  for (int j = 1; j <= 20; ++j) full += std::ldexp(1.0, -j);
  const PmfTable target = ugwd_pmf_table(GwdParams(a, full, rho), 60);
  double prev = 2.0;
  double partial = 0.0;
  for (int j = 1; j <= 20; ++j) {
    partial += std::ldexp(1.0, -j);
    const double tv = tv_distance(ugwd_pmf_table(GwdParams(a, partial, rho), 60), target);
    EXPECT_LE(tv, prev);
    prev = tv;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(Mgwd, Moments) {
  const MgwdParams p(1, 3, {1, 1});
  const MgwdMoments m = mgwd_moments(p);
  EXPECT_DOUBLE_EQ(m.covariances[0][1], 0.75);
  EXPECT_DOUBLE_EQ(m.cross_moments[0][1], 1.0);
  EXPECT_DOUBLE_EQ(mgwd_factorial_moment(p, {1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(m.means[0], 0.5);
  EXPECT_DOUBLE_EQ(m.variances[1], ugwd_variance(GwdParams(1, 1, 3)));
  EXPECT_THROW(mgwd_moments(MgwdParams(1, 2, {1, 1})), InfiniteMomentError);
  EXPECT_THROW(mgwd_factorial_moment(p, {2, 1}), InfiniteMomentError);
}

TEST(Mgwd, FactorialMomentReducesToUnivariate) {
  const MgwdParams p(2.0, 7.0, {1.5, 0.5});
  // Order (2, 0) of the pair equals order 2 of the first marginal.
  EXPECT_NEAR(mgwd_factorial_moment(p, {2, 0}), ugwd_factorial_moment(GwdParams(2.0, 1.5, 7.0), 2), 1e-14);
  // Order (1, 1) summed over the joint pmf.
  CompensatedSum s;
  for (std::int64_t i = 1; i < 300; ++i) {
    for (std::int64_t j = 1; j < 300; ++j) s += double(i * j) * std::exp(mgwd_log_pmf(p, {i, j}));
  }
  EXPECT_NEAR(s.value(), mgwd_factorial_moment(p, {1, 1}), 1e-6);
}

TEST(Sampler, MatchesPmf) {
  const GwdParams p(2, 3, 4);
  const auto xs = draw(p, 100000, 11);
  const PmfTable emp = empirical_table(xs, 80);
  const PmfTable ref = ugwd_pmf_table(p, 80);
  EXPECT_LT(tv_distance(emp, ref), 0.01);
  const auto ms = oracle::mean_se(xs);
  EXPECT_LT(std::fabs(ms.mean - 2.0), 3.0 * ms.se);
}

TEST(Sampler, ChiSquareGrid) {
  std::uint64_t seed = 100;
  for (const GwdParams& p : {GwdParams(2, 3, 4), GwdParams(0.5, 1, 2), GwdParams(5, 0.3, 1.5), GwdParams(1, 20, 6)}) {
    const auto xs = draw(p, 100000, seed++);
    const std::size_t max_n = 200;
    std::vector<std::uint64_t> obs(max_n + 2, 0);
    for (auto x : xs) ++obs[std::min<std::size_t>(static_cast<std::size_t>(x), max_n + 1)];
    const PmfTable ref = ugwd_pmf_table(p, max_n);
    EXPECT_GT(oracle::chi_square_pvalue(obs, ref.probs, ref.tail, xs.size()), 0.001)
        << p.a << " " << p.k << " " << p.rho;
  }
}

TEST(Sampler, Deterministic) {
  EXPECT_EQ(draw(GwdParams(2, 3, 4), 1000, 5), draw(GwdParams(2, 3, 4), 1000, 5));
  EXPECT_NE(draw(GwdParams(2, 3, 4), 1000, 5), draw(GwdParams(2, 3, 4), 1000, 6));
}

TEST(Sampler, MultivariateSumsAndMarginals) {
  const MgwdParams p(1, 2, {1, 1});
  Rng rng = make_stream(21, 0);
  std::vector<std::int64_t> sums, first;
  for (int i = 0; i < 100000; ++i) {
    const auto x = sample_mgwd(p, rng);
    sums.push_back(x[0] + x[1]);
    first.push_back(x[0]);
  }
  EXPECT_LT(tv_distance(empirical_table(sums, 100), ugwd_pmf_table(GwdParams(1, 2, 2), 100)), 0.01);
  EXPECT_LT(tv_distance(empirical_table(first, 100), ugwd_pmf_table(GwdParams(1, 1, 2), 100)), 0.01);
}

TEST(Sampler, MultivariateCovariance) {
  // rho = 6 keeps fourth moments finite so the standard error is meaningful.
  const MgwdParams p(1, 6, {1, 1});
  Rng rng = make_stream(22, 0);
  std::vector<double> prod;
  std::vector<std::int64_t> x0, x1;
  for (int i = 0; i < 100000; ++i) {
    const auto x = sample_mgwd(p, rng);
    x0.push_back(x[0]);
    x1.push_back(x[1]);
  }
  const double m0 = oracle::mean_se(x0).mean, m1 = oracle::mean_se(x1).mean;
  for (std::size_t i = 0; i < x0.size(); ++i) prod.push_back((x0[i] - m0) * (x1[i] - m1));
  const auto cov = oracle::mean_se(prod);
  EXPECT_LT(std::fabs(cov.mean - mgwd_moments(p).covariances[0][1]), 3.0 * cov.se);
}

TEST(ConditionalAllocation, Examples) {
  Rng rng = make_stream(3, 0);
  EXPECT_EQ(conditional_allocation(0, std::vector<double>{1, 1}, rng), (std::vector<std::int64_t>{0, 0}));
  EXPECT_EQ(conditional_allocation(17, std::vector<double>{2.5}, rng), (std::vector<std::int64_t>{17}));
  EXPECT_THROW(conditional_allocation(3, std::vector<double>{}, rng), DomainError);
  EXPECT_THROW(conditional_allocation(3, std::vector<double>{1, 0}, rng), DomainError);
}

TEST(ConditionalAllocation, UniformSplitTable) {
  Rng rng = make_stream(4, 0);
  const int n = 100000;
  std::array<int, 3> hits{};
  for (int i = 0; i < n; ++i) {
    const auto c = conditional_allocation(2, std::vector<double>{1, 1}, rng);
    ASSERT_EQ(c[0] + c[1], 2);
    ++hits[static_cast<std::size_t>(c[0])];
  }
  const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n);
  for (int j = 0; j < 3; ++j) EXPECT_LT(std::fabs(hits[j] / double(n) - 1.0 / 3.0), 3.0 * se) << j;
}

TEST(ConditionalAllocation, BetaBinomialMarginal) {
  Rng rng = make_stream(5, 0);
  const std::vector<double> w{0.7, 1.1, 2.2};
  const int n = 100000;
  const std::int64_t total = 12;
  std::vector<std::uint64_t> obs(total + 2, 0);
  for (int i = 0; i < n; ++i) {
    const auto c = conditional_allocation(total, w, rng);
    ASSERT_EQ(c[0] + c[1] + c[2], total);
    ++obs[static_cast<std::size_t>(c[1])];
  }
  std::vector<double> probs;
  for (std::int64_t j = 0; j <= total; ++j) probs.push_back(oracle::beta_binomial(total, j, 1.1, 0.7 + 2.2));
  EXPECT_GT(oracle::chi_square_pvalue(obs, probs, 0.0, n), 0.001);
}
