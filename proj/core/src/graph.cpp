#include "cfprop/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cfprop {

Matrix PcaModel::transform(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw std::invalid_argument("PcaModel::transform: expected " + std::to_string(mean.size()) +
                                " columns, got " + std::to_string(x.cols()));
  }
  const std::size_t k = components.cols();
  Matrix z(x.rows(), k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) {
        s += (x(i, j) - mean[j]) * components(j, c);
      }
      z(i, c) = s;
    }
  }
  return z;
}

PcaModel fit_pca(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (k < 1 || k > d || k > n - 1) {
    throw std::invalid_argument("fit_pca: k=" + std::to_string(k) +
                                " out of range for n=" + std::to_string(n) +
                                ", d=" + std::to_string(d));
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += x(i, j);
  for (auto& m : model.mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x(i, a) - model.mean[a];
      for (std::size_t b = a; b < d; ++b) {
        cov(a, b) += da * (x(i, b) - model.mean[b]);
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }
  }

  const EighResult eig = eigh_symmetric(cov);
  model.components = Matrix(d, k);
  model.explained_variance.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    model.explained_variance[c] = std::max(eig.eigenvalues[c], 0.0);
    // Deterministic sign: largest-magnitude entry (lowest index on ties)
    // made positive.
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double mag = std::abs(eig.eigenvectors(j, c));
      if (mag > best) {
        best = mag;
        arg = j;
      }
    }
    const double flip = eig.eigenvectors(arg, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) model.components(j, c) = flip * eig.eigenvectors(j, c);
  }
  return model;
}

SimilarityGraph::SimilarityGraph(Matrix z, double sigma2, std::optional<std::size_t> top_k)
    : z_(std::move(z)), sigma2_(sigma2) {
  if (!(sigma2_ > 0.0)) throw std::invalid_argument("SimilarityGraph: sigma2 must be positive");
  if (!top_k) return;

  const std::size_t n = z_.rows();
  const std::size_t k = std::min(*top_k, n - 1);
  neighbor_lists_.resize(n);
  std::set<IndexPair> pairs;
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(-kernel_weight(i, j), j);
    }
    std::stable_sort(cand.begin(), cand.end());
    neighbor_lists_[i].reserve(k);
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = cand[r].second;
      neighbor_lists_[i].push_back(j);
      pairs.insert({std::min(i, j), std::max(i, j)});
    }
  }
  neighbor_pairs_.assign(pairs.begin(), pairs.end());
}

double SimilarityGraph::kernel_weight(std::size_t i, std::size_t j) const {
  double sq = 0.0;
  for (std::size_t c = 0; c < z_.cols(); ++c) {
    const double diff = z_(i, c) - z_(j, c);
    sq += diff * diff;
  }
  return std::exp(-sq / sigma2_);
}

const std::vector<std::size_t>& SimilarityGraph::neighbors(std::size_t i) const {
  if (neighbor_lists_.empty()) {
    throw std::logic_error("SimilarityGraph: neighbor lists exist only with top_k set");
  }
  return neighbor_lists_.at(i);
}

std::vector<IndexPair> sample_pairs(Rng& rng, std::size_t n, std::size_t b2) {
  if (n < 2) throw std::invalid_argument("sample_pairs: need n >= 2");
  std::vector<IndexPair> pairs;
  pairs.reserve(b2);
  for (std::size_t s = 0; s < b2; ++s) {
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  return pairs;
}

std::vector<IndexPair> sample_pairs(Rng& rng, const SimilarityGraph& graph, std::size_t b2) {
  if (!graph.sparsified()) return sample_pairs(rng, graph.size(), b2);
  const auto& pool = graph.neighbor_pairs();
  std::vector<IndexPair> pairs;
  pairs.reserve(b2);
  for (std::size_t s = 0; s < b2; ++s) pairs.push_back(pool[rng.below(pool.size())]);
  return pairs;
}

}  // namespace cfprop
