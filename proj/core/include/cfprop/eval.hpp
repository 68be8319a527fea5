#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfprop/dataset.hpp"

namespace cfprop {

/// Mean squared ITE estimation error; tables report the square root.
double pehe(std::span<const double> true_tau, std::span<const double> est_tau);

struct EvalReport {
  double sqrt_pehe_labeled = 0.0;
  double sqrt_pehe_unlabeled = 0.0;
  double factual_mse_val = 0.0;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  std::string method;
  std::uint64_t trial_seed = 0;
};

/// sqrt(PEHE) over the labeled (train) and unlabeled (val + test) partitions
/// separately, against the noiseless true ITE mu1 - mu0.
EvalReport evaluate_method(const Dataset& ds, const SplitIndices& split,
                           std::span<const double> tau_hat, const std::string& method,
                           std::uint64_t trial_seed, double factual_mse_val);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;  // zero-variance differences with nonzero mean
};

/// Two-sided paired t-test on d = a - b with n-1 degrees of freedom. The
/// p-value comes from the regularized incomplete beta function
/// I_{df/(df+t^2)}(df/2, 1/2), evaluated by Lentz's continued fraction.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b) (exposed for verification).
double incomplete_beta(double a, double b, double x);

struct MethodSummary {
  std::string method;
  std::size_t trials = 0;
  double mean_labeled = 0.0;
  double sd_labeled = 0.0;  // NaN when trials < 2
  double mean_unlabeled = 0.0;
  double sd_unlabeled = 0.0;
  // Paired t-test vs the reference method; NaN for the reference itself or
  // when fewer than 2 paired trials exist.
  double t_labeled = 0.0;
  double p_labeled = 0.0;
  double t_unlabeled = 0.0;
  double p_unlabeled = 0.0;
};

struct TrialSummary {
  std::string reference;
  std::vector<MethodSummary> methods;  // in first-appearance order
};

/// Per-method mean and sample sd of sqrt(PEHE) over trials, plus paired
/// t-tests against the reference method. Trials are paired by seed order;
/// methods whose trial seeds disagree with the reference's are rejected.
TrialSummary aggregate(std::span<const EvalReport> reports, const std::string& reference);

/// "0.307±0.125"-style cell used by the result tables.
std::string format_mean_sd(double mean, double sd);

}  // namespace cfprop
