#include "cfprop/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace cfprop {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double sqrt_pehe_over(const std::vector<double>& true_tau, std::span<const double> est_tau,
                      std::span<const std::size_t> rows) {
  double s = 0.0;
  for (std::size_t i : rows) {
    const double diff = true_tau[i] - est_tau[i];
    s += diff * diff;
  }
  return std::sqrt(s / static_cast<double>(rows.size()));
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v, double mean) {
  if (v.size() < 2) return kNan;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Continued fraction for the regularized incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const int max_iter = 300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return h;
}

}  // namespace

double pehe(std::span<const double> true_tau, std::span<const double> est_tau) {
  if (true_tau.size() != est_tau.size() || true_tau.empty()) {
    throw std::invalid_argument("pehe: vectors must have equal nonzero length, got " +
                                std::to_string(true_tau.size()) + " vs " +
                                std::to_string(est_tau.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < true_tau.size(); ++i) {
    const double diff = true_tau[i] - est_tau[i];
    s += diff * diff;
  }
  return s / static_cast<double>(true_tau.size());
}

EvalReport evaluate_method(const Dataset& ds, const SplitIndices& split,
                           std::span<const double> tau_hat, const std::string& method,
                           std::uint64_t trial_seed, double factual_mse_val) {
  if (!ds.has_ground_truth()) {
    throw std::runtime_error("evaluate_method: dataset '" + ds.name + "' has no mu0/mu1");
  }
  if (tau_hat.size() != ds.n()) {
    throw std::invalid_argument("evaluate_method: tau_hat covers " +
                                std::to_string(tau_hat.size()) + " instances, dataset has " +
                                std::to_string(ds.n()));
  }
  const std::vector<double> true_tau = ds.true_ite();
  const std::vector<std::size_t> unlabeled = split.unlabeled();

  EvalReport report;
  report.sqrt_pehe_labeled = sqrt_pehe_over(true_tau, tau_hat, split.train);
  report.sqrt_pehe_unlabeled = sqrt_pehe_over(true_tau, tau_hat, unlabeled);
  report.factual_mse_val = factual_mse_val;
  report.n_labeled = split.train.size();
  report.n_unlabeled = unlabeled.size();
  report.method = method;
  report.trial_seed = trial_seed;
  return report;
}

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  // Use the symmetry that keeps the continued fraction converging quickly.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("paired_t_test: need equal lengths >= 2");
  }
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = mean_of(d);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult res;
  if (sd == 0.0) {
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
      res.degenerate = true;
    }
    return res;
  }
  const double df = static_cast<double>(n - 1);
  res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  res.p = incomplete_beta(df / 2.0, 0.5, df / (df + res.t * res.t));
  return res;
}

TrialSummary aggregate(std::span<const EvalReport> reports, const std::string& reference) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");

  std::vector<std::string> order;
  std::map<std::string, std::vector<const EvalReport*>> by_method;
  for (const auto& r : reports) {
    auto& bucket = by_method[r.method];
    if (bucket.empty()) order.push_back(r.method);
    bucket.push_back(&r);
  }
  const bool have_reference = by_method.count(reference) > 0;

  auto seeds_of = [](const std::vector<const EvalReport*>& rs) {
    std::vector<std::uint64_t> seeds;
    for (const auto* r : rs) seeds.push_back(r->trial_seed);
    return seeds;
  };
  const std::vector<std::uint64_t> ref_seeds =
      have_reference ? seeds_of(by_method[reference]) : std::vector<std::uint64_t>{};

  TrialSummary summary;
  summary.reference = reference;
  for (const auto& method : order) {
    const auto& rs = by_method[method];
    MethodSummary ms;
    ms.method = method;
    ms.trials = rs.size();

    std::vector<double> labeled, unlabeled;
    for (const auto* r : rs) {
      labeled.push_back(r->sqrt_pehe_labeled);
      unlabeled.push_back(r->sqrt_pehe_unlabeled);
    }
    ms.mean_labeled = mean_of(labeled);
    ms.sd_labeled = sample_sd(labeled, ms.mean_labeled);
    ms.mean_unlabeled = mean_of(unlabeled);
    ms.sd_unlabeled = sample_sd(unlabeled, ms.mean_unlabeled);

    ms.t_labeled = ms.t_unlabeled = ms.p_labeled = ms.p_unlabeled = kNan;
    if (have_reference && method != reference) {
      if (seeds_of(rs) != ref_seeds) {
        throw std::runtime_error("aggregate: trial seeds of '" + method +
                                 "' do not match reference '" + reference +
                                 "'; pairing is broken");
      }
      if (rs.size() >= 2) {
        std::vector<double> ref_labeled, ref_unlabeled;
        for (const auto* r : by_method[reference]) {
          ref_labeled.push_back(r->sqrt_pehe_labeled);
          ref_unlabeled.push_back(r->sqrt_pehe_unlabeled);
        }
        const TTestResult tl = paired_t_test(labeled, ref_labeled);
        const TTestResult tu = paired_t_test(unlabeled, ref_unlabeled);
        ms.t_labeled = tl.t;
        ms.p_labeled = tl.p;
        ms.t_unlabeled = tu.t;
        ms.p_unlabeled = tu.p;
      }
    }
    summary.methods.push_back(std::move(ms));
  }
  return summary;
}

std::string format_mean_sd(double mean, double sd) {
  char buf[64];
  if (std::isnan(sd)) {
    std::snprintf(buf, sizeof(buf), "%.3f±na", mean);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3f±%.3f", mean, sd);
  }
  return buf;
}

}  // namespace cfprop
