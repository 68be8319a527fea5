#pragma once

#include <span>
#include <vector>

#include "cfprop/dataset.hpp"
#include "cfprop/matrix.hpp"

namespace cfprop {

struct RidgeModel {
  std::vector<double> weights;
  double bias = 0.0;
  double ridge_lambda = 0.0;

  double predict(std::span<const double> x_row) const;
};

/// Closed-form ridge fit (normal equations via Cholesky); the intercept is
/// not penalized.
RidgeModel fit_ridge(const Matrix& x, std::span<const std::size_t> rows,
                     std::span<const double> y, double lambda);

/// Per-arm outcome predictions for a block of query points.
struct ArmPredictions {
  std::vector<double> y0;
  std::vector<double> y1;

  std::vector<double> ite() const;
};

/// One ridge model on [x; t]: the treatment enters as a feature, so the ITE
/// estimate is its coefficient, constant over queries.
ArmPredictions ridge1_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                              const Matrix& query_x, double lambda);
std::vector<double> ridge1_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                               const Matrix& query_x, double lambda);

/// Separate ridge models for the treated and control arms.
ArmPredictions ridge2_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                              const Matrix& query_x, double lambda);
std::vector<double> ridge2_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                               const Matrix& query_x, double lambda);

/// k-nearest-neighbor matching: per query, each arm's prediction is the
/// mean outcome of its k nearest labeled instances (Euclidean distance,
/// ties broken by lower original index).
ArmPredictions knn_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                           const Matrix& query_x, std::size_t k);
std::vector<double> knn_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                            const Matrix& query_x, std::size_t k);

struct PropensityModel {
  std::vector<double> weights;
  double bias = 0.0;

  double propensity(std::span<const double> x_row) const;
};

/// Logistic regression of treatment on covariates by damped Newton
/// iterations (ridge damping 1e-6 on the weights, never the intercept) to
/// gradient infinity-norm < 1e-8, at most 100 iterations. Errors out when
/// the fit separates the arms (all fitted propensities within 1e-12 of 0 or
/// 1).
PropensityModel fit_propensity(const Dataset& ds, std::span<const std::size_t> train_rows);

/// Propensity score matching: kNN matching on |e(x_a) - e(x_b)| over the
/// one-dimensional fitted score.
ArmPredictions psm_predict(const Dataset& ds, std::span<const std::size_t> train_rows,
                           const Matrix& query_x, std::size_t k);
std::vector<double> psm_ite(const Dataset& ds, std::span<const std::size_t> train_rows,
                            const Matrix& query_x, std::size_t k);

}  // namespace cfprop
