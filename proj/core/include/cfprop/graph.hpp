#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cfprop/matrix.hpp"
#include "cfprop/rng.hpp"

namespace cfprop {

struct PcaModel {
  std::vector<double> mean;        // d
  Matrix components;               // d x k, orthonormal columns
  std::vector<double> explained_variance;  // k, descending, >= 0

  Matrix transform(const Matrix& x) const;
};

/// PCA by eigendecomposition of the sample covariance, fitted on all
/// instances (labeled and unlabeled). Sign convention: the entry of largest
/// magnitude in each component is positive.
PcaModel fit_pca(const Matrix& x, std::size_t k);

using IndexPair = std::pair<std::size_t, std::size_t>;

/// Matching graph over PCA-projected covariates. Pair weights follow the
/// Gaussian kernel w_ij = exp(-||z_i - z_j||^2 / sigma2) and are evaluated
/// lazily per pair, so the n^2 matrix is never materialized. With top_k set,
/// sampling is restricted to the union of the per-instance top_k neighbor
/// lists.
class SimilarityGraph {
 public:
  SimilarityGraph(Matrix z, double sigma2,
                  std::optional<std::size_t> top_k = std::nullopt);

  std::size_t size() const { return z_.rows(); }
  double sigma2() const { return sigma2_; }
  const Matrix& z() const { return z_; }

  double kernel_weight(std::size_t i, std::size_t j) const;

  /// Neighbor list of instance i (top_k graphs only), sorted by weight
  /// descending with index ties broken low-first.
  const std::vector<std::size_t>& neighbors(std::size_t i) const;
  bool sparsified() const { return !neighbor_pairs_.empty(); }
  const std::vector<IndexPair>& neighbor_pairs() const { return neighbor_pairs_; }

 private:
  Matrix z_;
  double sigma2_;
  std::vector<std::vector<std::size_t>> neighbor_lists_;
  std::vector<IndexPair> neighbor_pairs_;  // union of neighbor lists, i < j
};

/// b2 unordered pairs (i < j), uniform with replacement over all n(n-1)/2
/// pairs.
std::vector<IndexPair> sample_pairs(Rng& rng, std::size_t n, std::size_t b2);

/// Sampling that honors the graph's top_k sparsification when present.
std::vector<IndexPair> sample_pairs(Rng& rng, const SimilarityGraph& graph, std::size_t b2);

}  // namespace cfprop
