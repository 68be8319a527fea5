#pragma once

#include <span>
#include <vector>

#include "cfprop/dataset.hpp"
#include "cfprop/graph.hpp"
#include "cfprop/tarnet.hpp"

namespace cfprop {

/// Batch normalization of the loss sums. kMean divides the supervised term
/// by its batch size and each propagation term by its pair count, making the
/// lambda grids batch-size independent; kSum keeps the raw sums for
/// brute-force equivalence checks.
enum class LossMode { kMean, kSum };

/// Inverse outcome variances: alpha = 1/var(y | t=1), beta = 1/var(y | t=0),
/// gamma = 1/(var(y|t=1) + var(y|t=0)), computed from labeled training
/// outcomes only. alpha scales the treated and beta the control branch of
/// the outcome propagation term; gamma scales the ITE propagation term.
struct OutcomeScaling {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.5;
};

/// Unbiased per-arm outcome variances over the given labeled rows, floored
/// at 1e-8 before inversion. Needs at least two instances per arm.
OutcomeScaling compute_scaling(const Dataset& ds, std::span<const std::size_t> train_rows);

struct LossBreakdown {
  double ls = 0.0;
  double lo = 0.0;
  double le = 0.0;
  double total = 0.0;
  double effective_lambda_o = 0.0;
  double effective_lambda_e = 0.0;
};

/// Squared factual-outcome loss over labeled rows; gradients flow through
/// the factual head of each instance only. Returns the loss; accumulates
/// into *grads when non-null.
double supervised_loss_and_grad(const TarnetParams& params, const Matrix& x,
                                std::span<const std::size_t> rows, std::span<const int> t,
                                std::span<const double> y, LossMode mode, TarnetGrads* grads);

/// Outcome propagation: sum over pairs of w_ij * [alpha (f(x_i,1)-f(x_j,1))^2
/// + beta (f(x_i,0)-f(x_j,0))^2]. Gradients flow through both arms of both
/// instances.
double outcome_prop_loss_and_grad(const TarnetParams& params, const Matrix& x,
                                  std::span<const IndexPair> pairs,
                                  const SimilarityGraph& graph, const OutcomeScaling& scaling,
                                  LossMode mode, TarnetGrads* grads);

/// ITE propagation: sum over pairs of w_ij * gamma * (tau_i - tau_j)^2 with
/// tau = f(.,1) - f(.,0).
double ite_prop_loss_and_grad(const TarnetParams& params, const Matrix& x,
                              std::span<const IndexPair> pairs, const SimilarityGraph& graph,
                              const OutcomeScaling& scaling, LossMode mode, TarnetGrads* grads);

/// total = ls + lambda_o * lo + lambda_e * le, with matching accumulated
/// gradients. A zero lambda skips its term entirely, so the lambda_o =
/// lambda_e = 0 configuration reduces bitwise to the supervised model.
LossBreakdown total_objective(const TarnetParams& params, const Matrix& x,
                              std::span<const std::size_t> rows, std::span<const int> t,
                              std::span<const double> y, std::span<const IndexPair> pairs_o,
                              std::span<const IndexPair> pairs_e, const SimilarityGraph& graph,
                              const OutcomeScaling& scaling, double lambda_o, double lambda_e,
                              LossMode mode, TarnetGrads* grads);

}  // namespace cfprop
