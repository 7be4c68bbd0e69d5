#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tmar/diagnostics.hpp"
#include "tmar/errors.hpp"

using namespace tmar;
using namespace tmar::testing;

namespace {

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = sample_normal(0.0, 1.0, rng);
  return x;
}

TMarSpec two_component(double mu1, double mu2, double s1 = 1.0, double s2 = 1.0) {
  return TMarSpec({0.5, 0.5}, {mu1, mu2}, {{0.2}, {0.3}}, {s1, s2}, {5.0, 9.0});
}

}  // namespace

TEST(Hdi, StandardNormal) {
  const auto x = normal_draws(1'000'000, 1);
  const auto [lo, hi] = hdi(x);
  EXPECT_NEAR(lo, -1.96, 0.02);
  EXPECT_NEAR(hi, 1.96, 0.02);
}

TEST(Hdi, ConstantDrawsGiveAPoint) {
  const std::vector<double> x(500, 3.25);
  const auto [lo, hi] = hdi(x);
  EXPECT_EQ(lo, 3.25);
  EXPECT_EQ(hi, 3.25);
}

TEST(Hdi, UniformWidth) {
  Rng rng(2);
  std::vector<double> x(200'000);
  for (auto& v : x) v = sample_uniform(0.0, 1.0, rng);
  const auto [lo, hi] = hdi(x);
  EXPECT_NEAR(hi - lo, 0.95, 0.01);
}

TEST(Hdi, SkewedDrawsShiftTowardTheMode) {
  // Exponential(1): the shortest 95% interval is [0, -log 0.05].
  Rng rng(3);
  std::vector<double> x(400'000);
  for (auto& v : x) v = sample_gamma(1.0, 1.0, rng);
  const auto [lo, hi] = hdi(x);
  EXPECT_NEAR(lo, 0.0, 0.005);
  EXPECT_NEAR(hi, -std::log(0.05), 0.03);
}

TEST(Hdi, RejectsSmallSamplesAndBadMass) {
  EXPECT_THROW(hdi(std::vector<double>(99, 1.0)), UsageError);
  EXPECT_THROW(hdi(std::vector<double>(100, 1.0), 0.0), UsageError);
  EXPECT_THROW(hdi(std::vector<double>(100, 1.0), 1.5), UsageError);
}

TEST(Ess, IndependentDraws) {
  const auto x = normal_draws(20'000, 4);
  const double ratio = effective_sample_size(x) / static_cast<double>(x.size());
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.2);
}

TEST(Ess, Ar1Chain) {
  Rng rng(5);
  std::vector<double> x(200'000);
  double v = 0.0;
  for (auto& out : x) {
    v = 0.9 * v + sample_normal(0.0, 1.0, rng);
    out = v;
  }
  const double ratio = effective_sample_size(x) / static_cast<double>(x.size());
  const double expected = 0.1 / 1.9;
  EXPECT_GT(ratio, expected / 1.5);
  EXPECT_LT(ratio, expected * 1.5);
}

TEST(Ess, ConstantSequenceIsZeroAndCappedAtN) {
  EXPECT_EQ(effective_sample_size(std::vector<double>(200, 1.0)), 0.0);
  // Alternating sequence is antithetic; the estimate is capped at N.
  std::vector<double> alt(200);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 1.0 : -1.0;
  EXPECT_LE(effective_sample_size(alt), 200.0);
}

TEST(Flatten, ColumnNamesAndValues) {
  ChainTrace trace;
  trace.draws = {TMarSpec({0.3, 0.7}, {1.0, 2.0}, {{0.1, 0.2}, {0.3}}, {1.5, 2.5}, {5.0, 6.0})};
  trace.lambdas = {0.8};
  const auto t = flatten_trace(trace);
  const std::vector<std::string> names{"pi_1",    "pi_2",    "mu_1",    "mu_2", "sigma_1", "sigma_2",
                                       "phi_1_1", "phi_1_2", "phi_2_1", "nu_1", "nu_2",    "lambda"};
  EXPECT_EQ(t.names, names);
  EXPECT_EQ(t.rows(), 1u);
  EXPECT_EQ(t.columns[t.find("phi_1_2")][0], 0.2);
  EXPECT_EQ(t.columns[t.find("sigma_2")][0], 2.5);
  EXPECT_EQ(t.columns[t.find("lambda")][0], 0.8);
  EXPECT_EQ(t.find("absent"), names.size());
}

TEST(Flatten, ChangingOrdersIsAnError) {
  ChainTrace trace;
  trace.draws = {TMarSpec({1.0}, {0.0}, {{0.1}}, {1.0}, {5.0}), TMarSpec({1.0}, {0.0}, {{0.1, 0.1}}, {1.0}, {5.0})};
  EXPECT_THROW(flatten_trace(trace), UsageError);
}

TEST(Relabel, WellSeparatedComponentsKeepTheirLabels) {
  Rng rng(6);
  ChainTrace trace;
  for (int i = 0; i < 1000; ++i) {
    trace.draws.push_back(two_component(-5.0 + sample_normal(0.0, 0.3, rng), 5.0 + sample_normal(0.0, 0.3, rng)));
  }
  const auto r = relabel_for_reporting(trace);
  EXPECT_GT(r.identity_count, 990u);
  EXPECT_EQ(r.trace.draws, trace.draws);
}

TEST(Relabel, FlippedLabelsAreAligned) {
  ChainTrace trace;
  const std::vector<std::size_t> swap{1, 0};
  for (int i = 0; i < 200; ++i) {
    const TMarSpec d = two_component(-2.0 + 0.001 * i, 3.0, 1.0, 2.0);
    trace.draws.push_back(i % 2 ? permute_components(d, swap) : d);
  }
  const auto r = relabel_for_reporting(trace);
  EXPECT_EQ(r.identity_count, 100u);
  for (std::size_t i = 0; i < r.trace.draws.size(); ++i) {
    EXPECT_LT(r.trace.draws[i].mean(0), 0.0) << i;
    EXPECT_EQ(r.trace.draws[i].scales()[1], 2.0) << i;
  }
  // The raw input stays as it was.
  EXPECT_GT(trace.draws[1].mean(0), 0.0);
}

TEST(Relabel, NeverMixesDifferentOrders) {
  ChainTrace trace;
  const TMarSpec a({0.5, 0.5}, {-2.0, 3.0}, {{0.1, 0.1}, {0.3}}, {1.0, 1.0}, {5.0, 5.0});
  const TMarSpec b({0.5, 0.5}, {3.0, -2.0}, {{0.1, 0.1}, {0.3}}, {1.0, 1.0}, {5.0, 5.0});
  trace.draws = {a, b};
  const auto r = relabel_for_reporting(trace);
  EXPECT_EQ(r.trace.draws[1], b);
  EXPECT_EQ(r.identity_count, 2u);
}

TEST(Relabel, PreservesTheMultisetOfValues) {
  Rng rng(7);
  ChainTrace trace;
  const std::vector<std::size_t> swap{1, 0};
  for (int i = 0; i < 300; ++i) {
    const TMarSpec d = two_component(sample_normal(-1.0, 1.0, rng), sample_normal(1.0, 1.0, rng));
    trace.draws.push_back(sample_uniform(0, 1, rng) < 0.5 ? permute_components(d, swap) : d);
  }
  const auto r = relabel_for_reporting(trace);
  for (std::size_t i = 0; i < trace.draws.size(); ++i) {
    auto m0 = trace.draws[i].means();
    auto m1 = r.trace.draws[i].means();
    std::sort(m0.begin(), m0.end());
    std::sort(m1.begin(), m1.end());
    ASSERT_EQ(m0, m1);
    EXPECT_EQ(r.trace.draws[i], permute_components(trace.draws[i], r.permutations[i]));
  }
}

TEST(Summary, RelabelThenSummarizeIsCovariant) {
  Rng rng(8);
  ChainTrace trace;
  const std::vector<std::size_t> swap{1, 0};
  for (int i = 0; i < 500; ++i) {
    const TMarSpec d = two_component(sample_normal(-4.0, 0.2, rng), sample_normal(4.0, 0.2, rng));
    trace.draws.push_back(i % 3 == 1 ? permute_components(d, swap) : d);
  }
  const auto direct = summarize(trace, true);
  const auto manual = summarize(flatten_trace(relabel_for_reporting(trace).trace));
  ASSERT_EQ(direct.parameters.size(), manual.parameters.size());
  for (std::size_t i = 0; i < direct.parameters.size(); ++i) {
    EXPECT_EQ(direct.parameters[i].name, manual.parameters[i].name);
    EXPECT_EQ(direct.parameters[i].mean, manual.parameters[i].mean);
    EXPECT_EQ(direct.parameters[i].hdi_lower, manual.parameters[i].hdi_lower);
  }
  EXPECT_TRUE(direct.relabeled);
  EXPECT_NEAR(direct.identity_share, 2.0 / 3.0, 0.01);
  EXPECT_NEAR(direct.parameters[2].mean, -4.0, 0.05);  // mu_1

  const auto raw = summarize(trace, false);
  EXPECT_FALSE(raw.relabeled);
  EXPECT_GT(raw.parameters[2].sd, 2.0);
}

TEST(Summary, InvariantsHold) {
  Rng rng(9);
  ChainTrace trace;
  for (int i = 0; i < 400; ++i) trace.draws.push_back(two_component(sample_normal(-3, 1, rng), sample_normal(3, 1, rng)));
  for (const auto& p : summarize(trace).parameters) {
    if (p.name.rfind("phi", 0) == 0 || p.name.rfind("nu", 0) == 0 || p.name.rfind("pi", 0) == 0 ||
        p.name.rfind("sigma", 0) == 0) {
      continue;  // constant columns in this trace
    }
    EXPECT_LT(p.hdi_lower, p.hdi_upper) << p.name;
    EXPECT_LE(p.ess, 400.0) << p.name;
    EXPECT_GT(p.ess, 0.0) << p.name;
  }
}

TEST(Thin, KeepsEveryStepRow) {
  ParameterTable t;
  t.names = {"a"};
  t.columns = {{0, 1, 2, 3, 4, 5, 6}};
  EXPECT_EQ(thin(t, 3).columns[0], (std::vector<double>{0, 3, 6}));
  EXPECT_EQ(thin(t, 1).columns[0], t.columns[0]);
  EXPECT_THROW(thin(t, 0), UsageError);
}
