#include "cfprop/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace cfprop {

namespace {

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = x.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// Stacks the i-endpoints of all pairs, then the j-endpoints, so row p and
// row p + pairs.size() of the batch hold pair p.
Matrix gather_pair_rows(const Matrix& x, std::span<const IndexPair> pairs) {
  Matrix out(2 * pairs.size(), x.cols());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto src_i = x.row(pairs[p].first);
    std::copy(src_i.begin(), src_i.end(), out.row(p).begin());
    const auto src_j = x.row(pairs[p].second);
    std::copy(src_j.begin(), src_j.end(), out.row(p + pairs.size()).begin());
  }
  return out;
}

double unbiased_variance(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace

OutcomeScaling compute_scaling(const Dataset& ds, std::span<const std::size_t> train_rows) {
  std::vector<double> y1, y0;
  for (std::size_t i : train_rows) {
    if (!ds.labeled[i]) continue;
    (ds.treatment[i] == 1 ? y1 : y0).push_back(ds.y_factual[i]);
  }
  if (y1.size() < 2 || y0.size() < 2) {
    throw std::invalid_argument("compute_scaling: need at least 2 labeled instances per arm, got " +
                                std::to_string(y1.size()) + " treated / " +
                                std::to_string(y0.size()) + " control");
  }
  const double floor = 1e-8;
  const double var1 = std::max(unbiased_variance(y1), floor);
  const double var0 = std::max(unbiased_variance(y0), floor);
  OutcomeScaling s;
  s.alpha = 1.0 / var1;
  s.beta = 1.0 / var0;
  s.gamma = 1.0 / (var1 + var0);
  return s;
}

double supervised_loss_and_grad(const TarnetParams& params, const Matrix& x,
                                std::span<const std::size_t> rows, std::span<const int> t,
                                std::span<const double> y, LossMode mode, TarnetGrads* grads) {
  if (rows.empty()) throw std::invalid_argument("supervised_loss: empty batch");
  const Matrix batch = gather_rows(x, rows);
  ForwardResult fwd = forward_both(params, batch);

  const double norm = mode == LossMode::kMean ? 1.0 / static_cast<double>(rows.size()) : 1.0;
  double loss = 0.0;
  std::vector<double> dpred0(rows.size(), 0.0), dpred1(rows.size(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    const double pred = t[i] == 1 ? fwd.pred1[r] : fwd.pred0[r];
    const double resid = y[i] - pred;
    loss += resid * resid;
    const double d = -2.0 * resid * norm;
    (t[i] == 1 ? dpred1 : dpred0)[r] = d;
  }
  loss *= norm;
  if (grads != nullptr) backward_both(params, fwd.cache, dpred0, dpred1, *grads);
  return loss;
}

double outcome_prop_loss_and_grad(const TarnetParams& params, const Matrix& x,
                                  std::span<const IndexPair> pairs,
                                  const SimilarityGraph& graph, const OutcomeScaling& scaling,
                                  LossMode mode, TarnetGrads* grads) {
  if (pairs.empty()) return 0.0;
  const std::size_t np = pairs.size();
  const Matrix batch = gather_pair_rows(x, pairs);
  ForwardResult fwd = forward_both(params, batch);

  const double norm = mode == LossMode::kMean ? 1.0 / static_cast<double>(np) : 1.0;
  double loss = 0.0;
  std::vector<double> dpred0(2 * np, 0.0), dpred1(2 * np, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    const double w = graph.kernel_weight(pairs[p].first, pairs[p].second);
    const double diff1 = fwd.pred1[p] - fwd.pred1[p + np];
    const double diff0 = fwd.pred0[p] - fwd.pred0[p + np];
    loss += w * (scaling.alpha * diff1 * diff1 + scaling.beta * diff0 * diff0);
    const double g1 = 2.0 * w * scaling.alpha * diff1 * norm;
    const double g0 = 2.0 * w * scaling.beta * diff0 * norm;
    dpred1[p] += g1;
    dpred1[p + np] -= g1;
    dpred0[p] += g0;
    dpred0[p + np] -= g0;
  }
  loss *= norm;
  if (grads != nullptr) backward_both(params, fwd.cache, dpred0, dpred1, *grads);
  return loss;
}

double ite_prop_loss_and_grad(const TarnetParams& params, const Matrix& x,
                              std::span<const IndexPair> pairs, const SimilarityGraph& graph,
                              const OutcomeScaling& scaling, LossMode mode, TarnetGrads* grads) {
  if (pairs.empty()) return 0.0;
  const std::size_t np = pairs.size();
  const Matrix batch = gather_pair_rows(x, pairs);
  ForwardResult fwd = forward_both(params, batch);

  const double norm = mode == LossMode::kMean ? 1.0 / static_cast<double>(np) : 1.0;
  double loss = 0.0;
  std::vector<double> dpred0(2 * np, 0.0), dpred1(2 * np, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    const double w = graph.kernel_weight(pairs[p].first, pairs[p].second);
    const double tau_i = fwd.pred1[p] - fwd.pred0[p];
    const double tau_j = fwd.pred1[p + np] - fwd.pred0[p + np];
    const double diff = tau_i - tau_j;
    loss += w * scaling.gamma * diff * diff;
    const double g = 2.0 * w * scaling.gamma * diff * norm;
    dpred1[p] += g;
    dpred0[p] -= g;
    dpred1[p + np] -= g;
    dpred0[p + np] += g;
  }
  loss *= norm;
  if (grads != nullptr) backward_both(params, fwd.cache, dpred0, dpred1, *grads);
  return loss;
}

LossBreakdown total_objective(const TarnetParams& params, const Matrix& x,
                              std::span<const std::size_t> rows, std::span<const int> t,
                              std::span<const double> y, std::span<const IndexPair> pairs_o,
                              std::span<const IndexPair> pairs_e, const SimilarityGraph& graph,
                              const OutcomeScaling& scaling, double lambda_o, double lambda_e,
                              LossMode mode, TarnetGrads* grads) {
  LossBreakdown out;
  out.effective_lambda_o = lambda_o;
  out.effective_lambda_e = lambda_e;
  out.ls = supervised_loss_and_grad(params, x, rows, t, y, mode, grads);
  if (lambda_o != 0.0) {
    TarnetGrads* sink = grads;
    TarnetGrads scratch;
    if (grads != nullptr) {
      scratch = zeros_like(params);
      sink = &scratch;
    }
    out.lo = outcome_prop_loss_and_grad(params, x, pairs_o, graph, scaling, mode, sink);
    if (grads != nullptr) grads->axpy(lambda_o, scratch);
  }
  if (lambda_e != 0.0) {
    TarnetGrads* sink = grads;
    TarnetGrads scratch;
    if (grads != nullptr) {
      scratch = zeros_like(params);
      sink = &scratch;
    }
    out.le = ite_prop_loss_and_grad(params, x, pairs_e, graph, scaling, mode, sink);
    if (grads != nullptr) grads->axpy(lambda_e, scratch);
  }
  out.total = out.ls + lambda_o * out.lo + lambda_e * out.le;
  return out;
}

}  // namespace cfprop
