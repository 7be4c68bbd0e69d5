#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "support.hpp"
#include "tmar/distributions.hpp"
#include "tmar/errors.hpp"

using namespace tmar;
using namespace tmar::testing;

namespace {

template <class F>
double integrate(F f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

std::vector<double> draw_t(const StandardizedT& d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sample_standardized_t(d, rng);
  return x;
}

}  // namespace

TEST(StandardizedT, RejectsInvalidParameters) {
  EXPECT_THROW(StandardizedT(0.0, 1.0, 2.0), UsageError);
  EXPECT_THROW(StandardizedT(0.0, 1.0, 1.5), UsageError);
  EXPECT_THROW(StandardizedT(0.0, 0.0, 5.0), UsageError);
  EXPECT_THROW(StandardizedT(0.0, -1.0, 5.0), UsageError);
  EXPECT_NO_THROW(StandardizedT(0.0, 1.0, 2.0001));
}

TEST(StandardizedT, VarianceNearUpperDofBound) {
  const auto x = draw_t(StandardizedT(0.0, 1.0, 30.0), 1'000'000, 11);
  EXPECT_NEAR(sample_variance(x), 1.0, 0.02);
}

TEST(StandardizedT, HeavyTailedComponentMoments) {
  const auto x = draw_t(StandardizedT(0.0, 25.0, 4.0), 1'000'000, 12);
  EXPECT_NEAR(sample_mean(x), 0.0, 0.05);
  EXPECT_NEAR(sample_variance(x), 25.0, 0.6);
}

TEST(StandardizedT, ExcessKurtosisMatchesClosedForm) {
  const StandardizedT d(0.0, 1.0, 10.0);
  // Closed form 6 / (nu - 4), cross-checked by integrating the density.
  const double m2 = integrate([&](double x) { return x * x * pdf_standardized_t(x, d); }, -400, 400);
  const double m4 = integrate([&](double x) { return std::pow(x, 4) * pdf_standardized_t(x, d); }, -400, 400);
  EXPECT_NEAR(m4 / (m2 * m2) - 3.0, 1.0, 1e-3);

  Rng rng(13);
  double s2 = 0.0;
  double s4 = 0.0;
  const std::size_t n = 10'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sample_standardized_t(d, rng);
    s2 += x * x;
    s4 += x * x * x * x;
  }
  s2 /= static_cast<double>(n);
  s4 /= static_cast<double>(n);
  EXPECT_NEAR(s4 / (s2 * s2) - 3.0, 1.0, 0.1);
}

TEST(StandardizedT, DensityAtModeMatchesSymbolicValue) {
  for (double nu : {2.5, 4.0, 10.0, 30.0}) {
    const double expected =
        std::tgamma((nu + 1.0) / 2.0) / (std::tgamma(nu / 2.0) * std::sqrt(std::numbers::pi * (nu - 2.0)));
    EXPECT_NEAR(pdf_standardized_t(0.0, StandardizedT(0.0, 1.0, nu)), expected, 1e-14);
  }
}

TEST(StandardizedT, DensityIntegratesToOne) {
  const StandardizedT d(0.0, 1.0, 5.0);
  const double total = integrate([&](double x) { return pdf_standardized_t(x, d); }, -50, 50);
  const double tails = 2.0 * (1.0 - st_cdf(50.0, 0.0, 1.0, 5.0));
  EXPECT_NEAR(total + tails, 1.0, 1e-10);
}

TEST(StandardizedT, LogDensityAgreesWithStudentT) {
  const StandardizedT d(1.5, 4.0, 7.0);
  for (double x : {-10.0, -1.0, 0.0, 1.5, 3.0, 25.0}) {
    EXPECT_NEAR(log_pdf_standardized_t(x, d), st_log_pdf(x, 1.5, 4.0, 7.0), 1e-12);
    EXPECT_NEAR(std::log(pdf_standardized_t(x, d)), log_pdf_standardized_t(x, d), 1e-12);
  }
}

TEST(StandardizedT, SamplerMatchesDensityKs) {
  for (double nu : {2.5, 4.0, 14.0}) {
    const auto x = draw_t(StandardizedT(2.0, 9.0, nu), 100'000, 14);
    const double p = ks_test(x, [&](double v) { return st_cdf(v, 2.0, 9.0, nu); });
    EXPECT_GT(p, 0.01) << "nu = " << nu;
  }
}

TEST(StandardizedT, SameSeedSameDraws) {
  const StandardizedT d(0.0, 1.0, 5.0);
  EXPECT_EQ(draw_t(d, 1000, 99), draw_t(d, 1000, 99));
  EXPECT_NE(draw_t(d, 1000, 99), draw_t(d, 1000, 100));
}

TEST(TruncatedGamma, DrawsStayInsideBounds) {
  const TruncatedGamma d(2.0, 0.5, 2.0, 30.0);
  Rng rng(1);
  for (int i = 0; i < 100'000; ++i) {
    const double x = sample_truncated_gamma(d, rng);
    ASSERT_GE(x, 2.0);
    ASSERT_LE(x, 30.0);
  }
}

TEST(TruncatedGamma, UntruncatedReducesToGamma) {
  const TruncatedGamma d(2.0, 0.5, 0.0, std::numeric_limits<double>::infinity());
  Rng rng(2);
  std::vector<double> x(400'000);
  for (auto& v : x) v = sample_truncated_gamma(d, rng);
  EXPECT_NEAR(sample_mean(x), 4.0, 0.05);
}

TEST(TruncatedGamma, MeanMatchesQuadrature) {
  const TruncatedGamma d(5.0, 1.0, 2.0, 30.0);
  const boost::math::gamma_distribution<double> parent(5.0, 1.0);
  const double mass = integrate([&](double x) { return boost::math::pdf(parent, x); }, 2.0, 30.0);
  const double mean = integrate([&](double x) { return x * boost::math::pdf(parent, x); }, 2.0, 30.0) / mass;
  Rng rng(3);
  std::vector<double> x(100'000);
  for (auto& v : x) v = sample_truncated_gamma(d, rng);
  EXPECT_NEAR(sample_mean(x), mean, 0.05);
}

TEST(TruncatedGamma, RejectionAndInversionPathsMatchCdf) {
  // The first interval holds most of the mass, the second almost none.
  for (auto [lo, hi] : {std::pair{2.0, 30.0}, std::pair{25.0, 40.0}}) {
    const TruncatedGamma d(2.0, 0.5, lo, hi);
    const boost::math::gamma_distribution<double> parent(2.0, 2.0);  // shape, scale
    const double flo = boost::math::cdf(parent, lo);
    const double fhi = boost::math::cdf(parent, hi);
    Rng rng(4);
    std::vector<double> x(50'000);
    for (auto& v : x) v = sample_truncated_gamma(d, rng);
    const double p = ks_test(x, [&](double v) { return (boost::math::cdf(parent, v) - flo) / (fhi - flo); });
    EXPECT_GT(p, 0.01) << lo << ".." << hi;
  }
}

TEST(TruncatedGamma, DensityIsRenormalized) {
  const TruncatedGamma d(5.8, 0.48, 2.0, 30.0);
  const double total = integrate([&](double x) { return std::exp(log_pdf_truncated_gamma(x, d)); }, 2.0, 30.0);
  EXPECT_NEAR(total, 1.0, 1e-10);
  EXPECT_EQ(log_pdf_truncated_gamma(1.0, d), -std::numeric_limits<double>::infinity());
}

TEST(TruncatedGamma, DegenerateIntervalIsAnError) {
  EXPECT_THROW(TruncatedGamma(2.0, 0.5, 500.0, 600.0), NumericalError);
  EXPECT_THROW(TruncatedGamma(2.0, 0.5, 3.0, 3.0), UsageError);
}

TEST(Dirichlet, SingleComponentIsOne) {
  Rng rng(5);
  const std::vector<double> w{1.0};
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_dirichlet(w, rng), std::vector<double>{1.0});
}

TEST(Dirichlet, ComponentMeans) {
  for (const std::vector<double>& w : {std::vector<double>{1, 1, 1}, std::vector<double>{11, 21, 31}}) {
    Rng rng(6);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> mean(w.size(), 0.0);
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
      const auto x = sample_dirichlet(w, rng);
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        ASSERT_GT(x[k], 0.0);
        mean[k] += x[k] / n;
        s += x[k];
      }
      ASSERT_NEAR(s, 1.0, 1e-12);
    }
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(mean[k], w[k] / total, 0.01);
  }
}

TEST(Dirichlet, RejectsBadWeights) {
  Rng rng(7);
  EXPECT_THROW(sample_dirichlet(std::vector<double>{}, rng), UsageError);
  EXPECT_THROW(sample_dirichlet(std::vector<double>{1.0, 0.0}, rng), UsageError);
  EXPECT_THROW(sample_dirichlet(std::vector<double>{1.0, -2.0}, rng), UsageError);
}

TEST(Dirichlet, LogDensityMatchesLgammaForm) {
  const std::vector<double> x{0.2, 0.3, 0.5};
  const std::vector<double> a{11, 21, 31};
  const double expected = std::lgamma(63.0) - std::lgamma(11.0) - std::lgamma(21.0) - std::lgamma(31.0) +
                          10 * std::log(0.2) + 20 * std::log(0.3) + 30 * std::log(0.5);
  EXPECT_NEAR(log_pdf_dirichlet(x, a), expected, 1e-10);
}

TEST(Categorical, UnderflowingWeightsStillSample) {
  Rng rng(8);
  const std::vector<double> lw{-2000.0, -2000.0 + std::log(3.0)};
  int ones = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) ones += sample_categorical_log(lw, rng) == 1;
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.75, 0.01);
}

TEST(LogSumExp, StableAndEdgeCases) {
  const std::vector<double> v{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_EQ(log_sum_exp(std::vector<double>{}), -std::numeric_limits<double>::infinity());
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_sum_exp(std::vector<double>{ninf, ninf}), ninf);
}

TEST(Densities, NormalAndGammaAgreeWithBoost) {
  EXPECT_NEAR(log_pdf_normal(1.0, 0.5, 4.0), -0.5 * std::log(2 * std::numbers::pi * 4.0) - 0.25 / 8.0, 1e-14);
  const boost::math::gamma_distribution<double> g(3.0, 1.0 / 2.0);
  EXPECT_NEAR(log_pdf_gamma(1.7, 3.0, 2.0), std::log(boost::math::pdf(g, 1.7)), 1e-12);
}
