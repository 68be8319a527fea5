#include "cfprop/eval.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "cfprop/rng.hpp"

using namespace cfprop;

TEST(PeheTest, ExactEstimateGivesZero) {
  const std::vector<double> tau{1.0, -0.5, 2.0};
  EXPECT_EQ(pehe(tau, tau), 0.0);
}

TEST(PeheTest, SimpleHandValue) {
  const std::vector<double> t{1.0, 1.0};
  const std::vector<double> e{0.0, 0.0};
  EXPECT_DOUBLE_EQ(pehe(t, e), 1.0);
  EXPECT_DOUBLE_EQ(std::sqrt(pehe(t, e)), 1.0);
}

TEST(PeheTest, MatchesLoopOracle) {
  Rng rng(130);
  std::vector<double> t(10), e(10);
  for (std::size_t i = 0; i < 10; ++i) {
    t[i] = rng.uniform(-2.0, 2.0);
    e[i] = rng.uniform(-2.0, 2.0);
  }
  double oracle = 0.0;
  for (std::size_t i = 0; i < 10; ++i) oracle += (t[i] - e[i]) * (t[i] - e[i]);
  oracle /= 10.0;
  EXPECT_NEAR(pehe(t, e), oracle, 1e-12);
}

TEST(PeheTest, LengthMismatchThrows) {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  EXPECT_THROW(pehe(a, b), std::invalid_argument);
}

TEST(PeheTest, QuadraticExpansionUnderConstantShift) {
  Rng rng(131);
  std::vector<double> t(50), e(50), shifted(50);
  for (std::size_t i = 0; i < 50; ++i) {
    t[i] = rng.normal();
    e[i] = rng.normal();
  }
  const double c = 0.8;
  for (std::size_t i = 0; i < 50; ++i) shifted[i] = e[i] + c;
  double mean_err = 0.0;
  for (std::size_t i = 0; i < 50; ++i) mean_err += e[i] - t[i];
  mean_err /= 50.0;
  EXPECT_NEAR(pehe(t, shifted) - pehe(t, e), c * c + 2.0 * c * mean_err, 1e-12);
}

TEST(PeheTest, SqrtScalesLinearlyWithErrorScale) {
  Rng rng(132);
  std::vector<double> t(30), e(30), worse(30);
  for (std::size_t i = 0; i < 30; ++i) {
    t[i] = rng.normal();
    e[i] = t[i] + rng.normal();
  }
  const double s = 2.5;
  for (std::size_t i = 0; i < 30; ++i) worse[i] = t[i] + s * (e[i] - t[i]);
  EXPECT_NEAR(std::sqrt(pehe(t, worse)), s * std::sqrt(pehe(t, e)), 1e-12);
}

TEST(EvaluateMethodTest, ConstantZeroEstimatorEqualsRmsTau) {
  const Dataset ds = gen_synthetic(200, 4, 1.0, 133);
  const SplitIndices idx = split(ds, {0.2, 0.2, 0.6, 134});
  const std::vector<double> zeros(ds.n(), 0.0);
  const EvalReport rep = evaluate_method(ds, idx, zeros, "zero", 1, 0.0);

  const std::vector<double> tau = ds.true_ite();
  auto rms_over = [&](const std::vector<std::size_t>& rows) {
    double s = 0.0;
    for (std::size_t i : rows) s += tau[i] * tau[i];
    return std::sqrt(s / static_cast<double>(rows.size()));
  };
  EXPECT_NEAR(rep.sqrt_pehe_labeled, rms_over(idx.train), 1e-12);
  EXPECT_NEAR(rep.sqrt_pehe_unlabeled, rms_over(idx.unlabeled()), 1e-12);
  EXPECT_EQ(rep.n_labeled, idx.train.size());
  EXPECT_EQ(rep.n_unlabeled, idx.val.size() + idx.test.size());
  EXPECT_EQ(rep.n_labeled + rep.n_unlabeled, ds.n());
}

TEST(EvaluateMethodTest, MissingGroundTruthNamesDataset) {
  Dataset ds = gen_synthetic(50, 2, 1.0, 135);
  ds.mu0.reset();
  ds.name = "mystery";
  const SplitIndices idx = split(ds, {0.2, 0.2, 0.6, 136});
  const std::vector<double> zeros(ds.n(), 0.0);
  try {
    evaluate_method(ds, idx, zeros, "zero", 1, 0.0);
    FAIL() << "expected error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mystery"), std::string::npos);
  }
}

TEST(PairedTTestTest, EqualSamplesGiveNull) {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const TTestResult r = paired_t_test(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(PairedTTestTest, DegenerateConstantDifference) {
  const std::vector<double> a{2.0, 3.0, 4.0, 5.0};
  const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
  const TTestResult r = paired_t_test(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_GT(r.t, 0.0);
}

TEST(PairedTTestTest, HandComputedFixture) {
  // d = (1, 2, 3): mean 2, sd 1, t = 2 / (1/sqrt(3)) = 3.4641, df = 2.
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{0.0, 0.0, 0.0};
  const TTestResult r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 3.4641, 1e-4);
  EXPECT_NEAR(r.p, 0.0742, 1e-3);
}

TEST(PairedTTestTest, SwapSymmetry) {
  Rng rng(137);
  std::vector<double> a(8), b(8);
  for (std::size_t i = 0; i < 8; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  const TTestResult ab = paired_t_test(a, b);
  const TTestResult ba = paired_t_test(b, a);
  EXPECT_NEAR(ab.t, -ba.t, 1e-12);
  EXPECT_NEAR(ab.p, ba.p, 1e-12);
}

TEST(IncompleteBetaTest, KnownValues) {
  // I_x(1, b) = 1 - (1-x)^b
  EXPECT_NEAR(incomplete_beta(1.0, 0.5, 0.142857142857), 1.0 - std::sqrt(6.0 / 7.0), 1e-10);
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
  EXPECT_NEAR(incomplete_beta(2.0, 3.0, 0.4), 1.0 - incomplete_beta(3.0, 2.0, 0.6), 1e-12);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
}

TEST(AggregateTest, MeanAndSampleSd) {
  std::vector<EvalReport> reports(2);
  reports[0] = {1.0, 2.0, 0.1, 10, 90, "m", 11};
  reports[1] = {3.0, 4.0, 0.2, 10, 90, "m", 12};
  const TrialSummary s = aggregate(reports, "m");
  ASSERT_EQ(s.methods.size(), 1u);
  EXPECT_DOUBLE_EQ(s.methods[0].mean_labeled, 2.0);
  EXPECT_DOUBLE_EQ(s.methods[0].sd_labeled, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(s.methods[0].mean_unlabeled, 3.0);
}

TEST(AggregateTest, SingleTrialSdUnavailable) {
  std::vector<EvalReport> reports(1);
  reports[0] = {1.0, 2.0, 0.1, 10, 90, "m", 11};
  const TrialSummary s = aggregate(reports, "m");
  EXPECT_TRUE(std::isnan(s.methods[0].sd_labeled));
  EXPECT_TRUE(std::isnan(s.methods[0].sd_unlabeled));
}

TEST(AggregateTest, PairedTestsAgainstReference) {
  std::vector<EvalReport> reports;
  Rng rng(140);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const double wobble = 0.01 * rng.normal();
    EvalReport cp{0.3 + 0.01 * t, 0.33 + 0.01 * t, 0.1, 100, 900, "cp", t};
    EvalReport tarnet{0.5 + 0.01 * t + wobble, 0.55 + 0.01 * t + wobble, 0.1, 100, 900,
                      "tarnet", t};
    reports.push_back(cp);
    reports.push_back(tarnet);
  }
  const TrialSummary s = aggregate(reports, "cp");
  ASSERT_EQ(s.methods.size(), 2u);
  EXPECT_EQ(s.methods[0].method, "cp");
  EXPECT_TRUE(std::isnan(s.methods[0].p_labeled));
  // tarnet is worse by ~0.2 on every trial: tiny p, positive t.
  EXPECT_LT(s.methods[1].p_labeled, 1e-6);
  EXPECT_GT(s.methods[1].t_labeled, 0.0);
  EXPECT_LT(s.methods[1].p_unlabeled, 1e-6);
}

TEST(AggregateTest, MismatchedSeedsRejected) {
  std::vector<EvalReport> reports;
  reports.push_back({0.3, 0.33, 0.1, 100, 900, "cp", 1});
  reports.push_back({0.3, 0.33, 0.1, 100, 900, "cp", 2});
  reports.push_back({0.5, 0.55, 0.1, 100, 900, "tarnet", 1});
  reports.push_back({0.5, 0.55, 0.1, 100, 900, "tarnet", 99});
  EXPECT_THROW(aggregate(reports, "cp"), std::runtime_error);
}

TEST(FormatTest, PaperStyleMeanSd) {
  EXPECT_EQ(format_mean_sd(0.307, 0.125), "0.307±0.125");
  EXPECT_EQ(format_mean_sd(1.0, std::nan("")), "1.000±na");
}
