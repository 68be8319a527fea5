#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfprop/adam.hpp"
#include "cfprop/dataset.hpp"
#include "cfprop/graph.hpp"
#include "cfprop/objective.hpp"
#include "cfprop/tarnet.hpp"

namespace cfprop {

struct TrainConfig {
  double lambda_o = 1.0;
  double lambda_e = 1.0;
  double sigma2 = 10.0;
  std::size_t pca_dims = 8;
  std::size_t b1 = 16;
  std::size_t b2 = 16;
  double lr = 1e-3;
  std::size_t max_epochs = 300;
  std::size_t warmup_epochs = 10;
  double decay_rate = 0.99;
  std::size_t patience = 30;
  ArchSpec arch;
  std::uint64_t seed = 0;
  bool standardize = true;
  std::optional<std::size_t> graph_top_k;
  LossMode loss_mode = LossMode::kMean;
  std::string history_path;  // JSONL epoch log when non-empty

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown losses;  // averaged over the epoch's steps
  double val_mse = 0.0;
  double lambda_o_eff = 0.0;
  double lambda_e_eff = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
};

/// Regularization schedule: zero during warmup, then the configured lambdas
/// decayed by decay_rate^(epoch - warmup).
std::pair<double, double> effective_lambdas(const TrainConfig& cfg, std::size_t epoch);

struct TrainResult {
  TarnetParams params;  // parameters of the best validation epoch
  TrainHistory history;
  Standardizer standardizer;
  PcaModel pca;
  SimilarityGraph graph;
  OutcomeScaling scaling;
};

/// Mini-batch training: per epoch the shuffled labeled set is partitioned
/// into b1-batches; each step draws b2 pairs for the outcome term and b2
/// pairs for the ITE term (separately, and only while their effective lambda
/// is nonzero), then applies one Adam update on the combined objective.
/// Validation factual MSE selects the returned parameters; training stops
/// after `patience` epochs without improvement.
TrainResult train(const Dataset& ds, const SplitIndices& split, const TrainConfig& cfg);

/// ITE estimates for every instance of a raw-covariate matrix, applying the
/// run's standardizer.
std::vector<double> predict_ite_all(const TrainResult& result, const Matrix& raw_x);

/// Factual-outcome predictions (arm chosen per instance) for the given rows.
std::vector<double> predict_factual(const TrainResult& result, const Matrix& raw_x,
                                    std::span<const std::size_t> rows,
                                    std::span<const int> treatment);

struct TrainGrids {
  std::vector<double> lambda_o;
  std::vector<double> lambda_e;
  std::vector<double> sigma2;
  std::vector<std::size_t> pca_dims;
  std::vector<std::size_t> b1;
  std::vector<std::size_t> b2;

  bool empty() const;
  std::size_t trial_count() const;
};

struct GridTrial {
  TrainConfig cfg;
  double val_mse = 0.0;
};

struct GridSearchResult {
  TrainConfig best;
  std::vector<GridTrial> trials;
};

/// Exhaustive product over the supplied grids (empty dimensions keep the
/// base value). Selection key is best validation factual MSE; ties prefer
/// smaller (lambda_o, lambda_e), then earlier enumeration order. Each grid
/// trial trains with a seed derived from (base seed, trial index).
GridSearchResult grid_search(const Dataset& ds, const SplitIndices& split,
                             const TrainConfig& base, const TrainGrids& grids);

}  // namespace cfprop
