#include "cfprop/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cfprop {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Mean outcome of the k nearest training rows in one arm, distances supplied
// per row. Distance ties resolve to the lower original index.
double knn_arm_mean(const std::vector<std::pair<double, std::size_t>>& dist_idx, std::size_t k,
                    const Dataset& ds) {
  double sum = 0.0;
  for (std::size_t r = 0; r < k; ++r) sum += ds.y_factual[dist_idx[r].second];
  return sum / static_cast<double>(k);
}

std::vector<std::size_t> arm_rows(const Dataset& ds, std::span<const std::size_t> rows,
                                  int arm) {
  std::vector<std::size_t> out;
  for (std::size_t i : rows) {
    if (ds.labeled[i] && ds.treatment[i] == arm) out.push_back(i);
  }
  return out;
}

}  // namespace

double RidgeModel::predict(std::span<const double> x_row) const {
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x_row[j];
  return s;
}

RidgeModel fit_ridge(const Matrix& x, std::span<const std::size_t> rows,
                     std::span<const double> y, double lambda) {
  if (rows.empty()) throw std::invalid_argument("fit_ridge: no training rows");
  if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
  const std::size_t d = x.cols();
  const std::size_t p = d + 1;  // intercept last

  Matrix z(rows.size(), p);
  Matrix rhs(p, 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) z(r, j) = x(rows[r], j);
    z(r, d) = 1.0;
  }
  Matrix gram = matmul(transpose(z), z);
  for (std::size_t j = 0; j < d; ++j) gram(j, j) += lambda;  // intercept unpenalized
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < p; ++j) rhs(j, 0) += z(r, j) * y[rows[r]];
  }
  const Matrix coef = solve_spd(gram, rhs);

  RidgeModel model;
  model.ridge_lambda = lambda;
  model.weights.resize(d);
  for (std::size_t j = 0; j < d; ++j) model.weights[j] = coef(j, 0);
  model.bias = coef(d, 0);
  return model;
}

std::vector<double> ArmPredictions::ite() const {
  std::vector<double> tau(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) tau[i] = y1[i] - y0[i];
  return tau;
}

ArmPredictions ridge1_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                              const Matrix& query_x, double lambda) {
  // Augment covariates with the treatment as an extra feature.
  const std::size_t d = ds.dim();
  Matrix aug(ds.n(), d + 1);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < d; ++j) aug(i, j) = ds.x(i, j);
    aug(i, d) = ds.labeled[i] ? static_cast<double>(ds.treatment[i]) : 0.0;
  }
  const RidgeModel model = fit_ridge(aug, train_rows, ds.y_factual, lambda);

  ArmPredictions out;
  out.y0.resize(query_x.rows());
  out.y1.resize(query_x.rows());
  std::vector<double> row(d + 1);
  for (std::size_t q = 0; q < query_x.rows(); ++q) {
    for (std::size_t j = 0; j < d; ++j) row[j] = query_x(q, j);
    row[d] = 0.0;
    out.y0[q] = model.predict(row);
    row[d] = 1.0;
    out.y1[q] = model.predict(row);
  }
  return out;
}

std::vector<double> ridge1_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                               const Matrix& query_x, double lambda) {
  return ridge1_predict(ds, train_rows, query_x, lambda).ite();
}

ArmPredictions ridge2_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                              const Matrix& query_x, double lambda) {
  const std::vector<std::size_t> treated = arm_rows(ds, train_rows, 1);
  const std::vector<std::size_t> control = arm_rows(ds, train_rows, 0);
  if (treated.size() < 2 || control.size() < 2) {
    throw std::invalid_argument("ridge2: need at least 2 labeled instances per arm");
  }
  const RidgeModel m1 = fit_ridge(ds.x, treated, ds.y_factual, lambda);
  const RidgeModel m0 = fit_ridge(ds.x, control, ds.y_factual, lambda);

  ArmPredictions out;
  out.y0.resize(query_x.rows());
  out.y1.resize(query_x.rows());
  for (std::size_t q = 0; q < query_x.rows(); ++q) {
    out.y0[q] = m0.predict(query_x.row(q));
    out.y1[q] = m1.predict(query_x.row(q));
  }
  return out;
}

std::vector<double> ridge2_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                               const Matrix& query_x, double lambda) {
  return ridge2_predict(ds, train_rows, query_x, lambda).ite();
}

ArmPredictions knn_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                           const Matrix& query_x, std::size_t k) {
  if (k == 0) throw std::invalid_argument("knn: k must be >= 1");
  const std::vector<std::size_t> treated = arm_rows(ds, train_rows, 1);
  const std::vector<std::size_t> control = arm_rows(ds, train_rows, 0);
  if (treated.size() < k || control.size() < k) {
    throw std::invalid_argument("knn: each arm needs at least k=" + std::to_string(k) +
                                " labeled instances, got " + std::to_string(treated.size()) +
                                " treated / " + std::to_string(control.size()) + " control");
  }

  ArmPredictions out;
  out.y0.resize(query_x.rows());
  out.y1.resize(query_x.rows());
  std::vector<std::pair<double, std::size_t>> dist_idx;
  for (std::size_t q = 0; q < query_x.rows(); ++q) {
    const auto query = query_x.row(q);
    for (const auto* arm : {&control, &treated}) {
      dist_idx.clear();
      for (std::size_t i : *arm) {
        double sq = 0.0;
        for (std::size_t j = 0; j < ds.dim(); ++j) {
          const double diff = query[j] - ds.x(i, j);
          sq += diff * diff;
        }
        dist_idx.emplace_back(sq, i);
      }
      std::partial_sort(dist_idx.begin(), dist_idx.begin() + static_cast<std::ptrdiff_t>(k),
                        dist_idx.end());
      (arm == &control ? out.y0 : out.y1)[q] = knn_arm_mean(dist_idx, k, ds);
    }
  }
  return out;
}

std::vector<double> knn_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                            const Matrix& query_x, std::size_t k) {
  return knn_predict(ds, train_rows, query_x, k).ite();
}

double PropensityModel::propensity(std::span<const double> x_row) const {
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x_row[j];
  return sigmoid(s);
}

PropensityModel fit_propensity(const Dataset& ds, std::span<const std::size_t> train_rows) {
  const std::vector<std::size_t> treated = arm_rows(ds, train_rows, 1);
  const std::vector<std::size_t> control = arm_rows(ds, train_rows, 0);
  if (treated.empty() || control.empty()) {
    throw std::invalid_argument("fit_propensity: both treatment arms must be present");
  }

  const std::size_t d = ds.dim();
  const std::size_t p = d + 1;
  const double damping = 1e-6;

  std::vector<double> coef(p, 0.0);  // weights then intercept
  std::vector<double> prob(train_rows.size(), 0.5);

  auto negloglik = [&](const std::vector<double>& c) {
    double nll = 0.0;
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      const std::size_t i = train_rows[r];
      double z = c[d];
      for (std::size_t j = 0; j < d; ++j) z += c[j] * ds.x(i, j);
      // log(1 + exp(.)) in a form stable for large |z|
      const double soft = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
      nll += soft - (ds.treatment[i] == 1 ? z : 0.0);
    }
    double pen = 0.0;
    for (std::size_t j = 0; j < d; ++j) pen += c[j] * c[j];
    return nll + 0.5 * damping * pen;
  };

  double cur_nll = negloglik(coef);
  for (int iter = 0; iter < 100; ++iter) {
    // Gradient and Hessian of the damped negative log-likelihood.
    std::vector<double> grad(p, 0.0);
    Matrix hess(p, p);
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      const std::size_t i = train_rows[r];
      double z = coef[d];
      for (std::size_t j = 0; j < d; ++j) z += coef[j] * ds.x(i, j);
      const double e = sigmoid(z);
      prob[r] = e;
      const double resid = e - (ds.treatment[i] == 1 ? 1.0 : 0.0);
      const double wgt = e * (1.0 - e);
      for (std::size_t a = 0; a < p; ++a) {
        const double xa = a < d ? ds.x(i, a) : 1.0;
        grad[a] += resid * xa;
        for (std::size_t b = a; b < p; ++b) {
          const double xb = b < d ? ds.x(i, b) : 1.0;
          hess(a, b) += wgt * xa * xb;
        }
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      grad[j] += damping * coef[j];
      hess(j, j) += damping;
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < a; ++b) hess(a, b) = hess(b, a);

    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    if (gnorm < 1e-8) break;

    Matrix rhs(p, 1);
    for (std::size_t a = 0; a < p; ++a) rhs(a, 0) = -grad[a];
    Matrix step;
    try {
      step = solve_spd(hess, rhs);
    } catch (const NotSpdError&) {
      throw std::runtime_error(
          "fit_propensity: degenerate Hessian (separated data); refit with stronger ridge "
          "damping");
    }

    // Halve the step until the damped objective stops increasing.
    double scale = 1.0;
    std::vector<double> trial(p);
    for (int halving = 0; halving < 50; ++halving) {
      for (std::size_t a = 0; a < p; ++a) trial[a] = coef[a] + scale * step(a, 0);
      const double nll = negloglik(trial);
      if (nll <= cur_nll + 1e-12) {
        coef = trial;
        cur_nll = nll;
        break;
      }
      scale *= 0.5;
    }
  }

  bool all_pinned = true;
  for (double e : prob) {
    if (e > 1e-12 && e < 1.0 - 1e-12) {
      all_pinned = false;
      break;
    }
  }
  if (all_pinned) {
    throw std::runtime_error(
        "fit_propensity: propensities separated to {0,1}; refit with stronger ridge damping");
  }

  PropensityModel model;
  model.weights.assign(coef.begin(), coef.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = coef[d];
  return model;
}

ArmPredictions psm_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                           const Matrix& query_x, std::size_t k) {
  if (k == 0) throw std::invalid_argument("psm: k must be >= 1");
  const std::vector<std::size_t> treated = arm_rows(ds, train_rows, 1);
  const std::vector<std::size_t> control = arm_rows(ds, train_rows, 0);
  if (treated.size() < k || control.size() < k) {
    throw std::invalid_argument("psm: each arm needs at least k=" + std::to_string(k) +
                                " labeled instances");
  }
  const PropensityModel model = fit_propensity(ds, train_rows);

  std::vector<double> train_score(ds.n(), 0.0);
  for (std::size_t i : train_rows) train_score[i] = model.propensity(ds.x.row(i));

  ArmPredictions out;
  out.y0.resize(query_x.rows());
  out.y1.resize(query_x.rows());
  std::vector<std::pair<double, std::size_t>> dist_idx;
  for (std::size_t q = 0; q < query_x.rows(); ++q) {
    const double e_q = model.propensity(query_x.row(q));
    for (const auto* arm : {&control, &treated}) {
      dist_idx.clear();
      for (std::size_t i : *arm) dist_idx.emplace_back(std::abs(e_q - train_score[i]), i);
      std::partial_sort(dist_idx.begin(), dist_idx.begin() + static_cast<std::ptrdiff_t>(k),
                        dist_idx.end());
      (arm == &control ? out.y0 : out.y1)[q] = knn_arm_mean(dist_idx, k, ds);
    }
  }
  return out;
}

std::vector<double> psm_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                            const Matrix& query_x, std::size_t k) {
  return psm_predict(ds, train_rows, query_x, k).ite();
}

}  // namespace cfprop
