#include "relci/ppi_ci.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "relci/errors.h"
#include "relci/random.h"
#include "relci/stats.h"
#include "support/fixtures.h"
#include "support/oracles.h"

namespace relci {
namespace {

TEST(PpiEstimateTest, WorkedExample) {
  const PpiEstimate e = ComputePpiEstimate(std::vector<double>{3, 5},
                                           std::vector<double>{2, 4},
                                           std::vector<double>{2, 4, 6, 8});
  EXPECT_DOUBLE_EQ(e.estimate, 6.0);
  EXPECT_DOUBLE_EQ(e.var_pred, 20.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.var_error, 0.0);
  EXPECT_EQ(e.n, 2);
  EXPECT_EQ(e.N, 4);
  const CiReport r = PpiCi(e, 0.05);
  const double half = 1.959963984540054 * std::sqrt(0.0 / 2 + (20.0 / 3.0) / 4);
  EXPECT_NEAR(r.upper - 6.0, 2.5307, 1e-3);
  EXPECT_NEAR(6.0 - r.lower, half, 1e-9);
  EXPECT_EQ(r.method, "ppi");
  EXPECT_TRUE(r.diagnostics.contains("var_pred"));
  EXPECT_TRUE(r.diagnostics.contains("var_error"));
}

TEST(PpiEstimateTest, PerfectPredictions) {
  const std::vector<double> t = {1, 4, 2, 8, 5};
  const PpiEstimate e = ComputePpiEstimate(t, t, t);
  EXPECT_DOUBLE_EQ(e.estimate, testing::Mean(t));
  EXPECT_EQ(e.var_error, 0.0);
  const CiReport r = PpiCi(e, 0.1);
  EXPECT_NEAR(r.Width(), 2 * stats::NormalQuantile(0.95) * std::sqrt(e.var_pred / e.N),
              1e-12);
}

TEST(PpiEstimateTest, ConstantPredictionsReproduceClassicalCi) {
  Rng rng(12);
  std::vector<double> t(25);
  for (double& x : t) x = rng.Normal() * 2 + 5;
  const std::vector<double> zeros_labeled(t.size(), 0.0);
  const std::vector<double> zeros_all(t.size() + 40, 0.0);
  const PpiEstimate e = ComputePpiEstimate(t, zeros_labeled, zeros_all);
  EXPECT_DOUBLE_EQ(e.estimate, testing::Mean(t));
  EXPECT_EQ(e.var_pred, 0.0);
  const CiReport r = PpiCi(e, 0.05);
  const double half = stats::NormalQuantile(0.975) *
                      std::sqrt(testing::Variance(t) / t.size());
  EXPECT_NEAR(r.lower, testing::Mean(t) - half, 1e-12);
  EXPECT_NEAR(r.upper, testing::Mean(t) + half, 1e-12);
}

TEST(PpiEstimateTest, Errors) {
  try {
    ComputePpiEstimate(std::vector<double>{1, 2}, std::vector<double>{1},
                       std::vector<double>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignment);
  }
  try {
    ComputePpiEstimate(std::vector<double>{1}, std::vector<double>{1},
                       std::vector<double>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
  const PpiEstimate ok = ComputePpiEstimate(
      std::vector<double>{1, 2}, std::vector<double>{1, 2}, std::vector<double>{1, 2});
  for (double alpha : {0.0, 1.0, -0.5, 2.0}) {
    try {
      PpiCi(ok, alpha);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidAlpha);
    }
  }
}

TEST(PpiCiTest, ZeroVariancesGiveZeroWidth) {
  PpiEstimate e{3.0, 0.0, 0.0, 5, 10};
  const CiReport r = PpiCi(e, 0.05);
  EXPECT_EQ(r.lower, 3.0);
  EXPECT_EQ(r.upper, 3.0);
}

TEST(PpiCiTest, LargerAlphaIsStrictlyNarrowerAndSymmetric) {
  PpiEstimate e{1.0, 2.0, 0.5, 10, 100};
  const CiReport a = PpiCi(e, 0.05);
  const CiReport b = PpiCi(e, 0.32);
  EXPECT_LT(b.Width(), a.Width());
  EXPECT_NEAR(a.upper - a.estimate, a.estimate - a.lower, 1e-12);
}

TEST(PpiEstimateTest, Unbiased) {
  // Population: true utility t ~ N(5, 4); predictions biased by +1 with noise.
  const double mu = 5.0;
  std::vector<double> estimates;
  for (int rep = 0; rep < 10'000; ++rep) {
    Rng rng(DeriveSeed(31, rep));
    const int n = 20;
    const int unlabeled = 80;
    std::vector<double> t(n), pl(n), pa;
    for (int i = 0; i < n; ++i) {
      t[i] = mu + 2 * rng.Normal();
      pl[i] = t[i] + 1 + 0.5 * rng.Normal();
      pa.push_back(pl[i]);
    }
    for (int i = 0; i < unlabeled; ++i) {
      pa.push_back(mu + 2 * rng.Normal() + 1 + 0.5 * rng.Normal());
    }
    estimates.push_back(ComputePpiEstimate(t, pl, pa).estimate);
  }
  const double sd = std::sqrt(testing::Variance(estimates));
  EXPECT_LT(std::abs(testing::Mean(estimates) - mu), 3 * sd / 100);
}

TEST(PpiEstimateForDatasetTest, UsesQuerySetMembership) {
  using testing::MakeDataset;
  const Dataset d = MakeDataset(
      1, {{"a", {{"x", 1, {0.5, 0.5}}}},
          {"b", {{"x", 0, {0.5, 0.5}}}},
          {"c", {{"x", std::nullopt, {0.0, 1.0}}}}});
  const MetricSpec prec = ParseMetric("prec@1");
  const PpiEstimate e = PpiEstimateForDataset(prec, d, {"a", "b"}, {"a", "b", "c"});
  // mean(pred_all) = (0.5 + 0.5 + 1) / 3; mean error = ((1 - .5) + (0 - .5)) / 2.
  EXPECT_DOUBLE_EQ(e.estimate, 2.0 / 3.0);
  EXPECT_EQ(e.n, 2);
  EXPECT_EQ(e.N, 3);
  EXPECT_THROW(PpiEstimateForDataset(prec, d, {"a", "b"}, {"a", "c"}), Error);
}

}  // namespace
}  // namespace relci
