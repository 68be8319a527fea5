#include "cfprop/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace cfprop {

namespace {

// Trainer sub-stream ids, derived from TrainConfig::seed.
enum TrainStream : std::uint64_t {
  kStreamInit = 101,
  kStreamBatches = 102,
  kStreamPairsO = 103,
  kStreamPairsE = 104,
  kStreamGridTrial = 1000,  // + trial index
};

double validation_mse(const TarnetParams& params, const Matrix& x, const Dataset& ds,
                      std::span<const std::size_t> val_rows) {
  Matrix batch(val_rows.size(), x.cols());
  for (std::size_t r = 0; r < val_rows.size(); ++r) {
    const auto src = x.row(val_rows[r]);
    std::copy(src.begin(), src.end(), batch.row(r).begin());
  }
  const ForwardResult fwd = forward_both(params, batch);
  double mse = 0.0;
  for (std::size_t r = 0; r < val_rows.size(); ++r) {
    const std::size_t i = val_rows[r];
    const double pred = ds.treatment[i] == 1 ? fwd.pred1[r] : fwd.pred0[r];
    const double resid = ds.y_factual[i] - pred;
    mse += resid * resid;
  }
  return mse / static_cast<double>(val_rows.size());
}

void append_history_jsonl(const std::string& path, const EpochRecord& rec) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("train: cannot open history log '" + path + "'");
  nlohmann::json j{{"epoch", rec.epoch},
                   {"ls", rec.losses.ls},
                   {"lo", rec.losses.lo},
                   {"le", rec.losses.le},
                   {"total", rec.losses.total},
                   {"val_mse", rec.val_mse},
                   {"lambda_o_eff", rec.lambda_o_eff},
                   {"lambda_e_eff", rec.lambda_e_eff},
                   {"seconds", rec.seconds}};
  out << j.dump() << "\n";
}

}  // namespace

void TrainConfig::validate() const {
  if (lambda_o < 0.0 || lambda_e < 0.0) {
    throw std::invalid_argument("TrainConfig: lambdas must be >= 0");
  }
  if (!(sigma2 > 0.0)) throw std::invalid_argument("TrainConfig: sigma2 must be > 0");
  if (pca_dims == 0) throw std::invalid_argument("TrainConfig: pca_dims must be >= 1");
  if (b1 == 0 || b2 == 0) throw std::invalid_argument("TrainConfig: batch sizes must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (!(decay_rate > 0.0) || decay_rate > 1.0) {
    throw std::invalid_argument("TrainConfig: decay_rate must be in (0, 1]");
  }
  arch.validate();
}

std::pair<double, double> effective_lambdas(const TrainConfig& cfg, std::size_t epoch) {
  if (epoch < cfg.warmup_epochs) return {0.0, 0.0};
  const double decay =
      std::pow(cfg.decay_rate, static_cast<double>(epoch - cfg.warmup_epochs));
  return {cfg.lambda_o * decay, cfg.lambda_e * decay};
}

TrainResult train(const Dataset& ds, const SplitIndices& split, const TrainConfig& cfg) {
  cfg.validate();
  if (split.val.empty()) throw std::invalid_argument("train: validation set is empty");
  std::size_t n_treated = 0, n_control = 0;
  for (std::size_t i : split.train) (ds.treatment[i] == 1 ? n_treated : n_control) += 1;
  if (n_treated < 2 || n_control < 2) {
    throw std::invalid_argument("train: need at least 2 labeled instances per arm, got " +
                                std::to_string(n_treated) + " treated / " +
                                std::to_string(n_control) + " control");
  }

  Standardizer standardizer;
  if (cfg.standardize) {
    standardizer = fit_standardizer(ds.x, split.train);
  } else {
    standardizer.mean.assign(ds.dim(), 0.0);
    standardizer.scale.assign(ds.dim(), 1.0);
  }
  const Matrix x = standardizer.apply(ds.x);

  const std::size_t k = std::min({cfg.pca_dims, ds.dim(), ds.n() - 1});
  PcaModel pca = fit_pca(x, k);
  SimilarityGraph graph(pca.transform(x), cfg.sigma2, cfg.graph_top_k);
  const OutcomeScaling scaling = compute_scaling(ds, split.train);

  const Rng root(cfg.seed);
  Rng rng_init = root.derive(kStreamInit);
  TarnetParams params = init_params(ds.dim(), cfg.arch, rng_init);
  AdamState adam = AdamState::create(params, cfg.lr);
  Rng rng_batches = root.derive(kStreamBatches);
  Rng rng_pairs_o = root.derive(kStreamPairsO);
  Rng rng_pairs_e = root.derive(kStreamPairsE);

  TrainResult result{params, {}, standardizer, std::move(pca), std::move(graph), scaling};
  double best_mse = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;

  std::vector<std::size_t> order = split.train;
  TarnetGrads grads = zeros_like(params);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [lam_o, lam_e] = effective_lambdas(cfg, epoch);

    rng_batches.shuffle(order);
    LossBreakdown epoch_losses;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.b1) {
      const std::size_t len = std::min(cfg.b1, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const std::vector<IndexPair> pairs_o =
          lam_o != 0.0 ? sample_pairs(rng_pairs_o, result.graph, cfg.b2)
                       : std::vector<IndexPair>{};
      const std::vector<IndexPair> pairs_e =
          lam_e != 0.0 ? sample_pairs(rng_pairs_e, result.graph, cfg.b2)
                       : std::vector<IndexPair>{};

      grads.set_zero();
      const LossBreakdown step_losses =
          total_objective(params, x, batch, ds.treatment, ds.y_factual, pairs_o, pairs_e,
                          result.graph, scaling, lam_o, lam_e, cfg.loss_mode, &grads);
      if (!std::isfinite(step_losses.total)) {
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
            std::to_string(steps) + " (ls=" + std::to_string(step_losses.ls) +
            ", lo=" + std::to_string(step_losses.lo) +
            ", le=" + std::to_string(step_losses.le) + ")");
      }
      adam_step(adam, params, grads);

      epoch_losses.ls += step_losses.ls;
      epoch_losses.lo += step_losses.lo;
      epoch_losses.le += step_losses.le;
      epoch_losses.total += step_losses.total;
      ++steps;
    }
    const double inv_steps = 1.0 / static_cast<double>(steps);
    epoch_losses.ls *= inv_steps;
    epoch_losses.lo *= inv_steps;
    epoch_losses.le *= inv_steps;
    epoch_losses.total *= inv_steps;
    epoch_losses.effective_lambda_o = lam_o;
    epoch_losses.effective_lambda_e = lam_e;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.losses = epoch_losses;
    rec.val_mse = validation_mse(params, x, ds, split.val);
    rec.lambda_o_eff = lam_o;
    rec.lambda_e_eff = lam_e;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(rec);
    if (!cfg.history_path.empty()) append_history_jsonl(cfg.history_path, rec);

    if (rec.val_mse < best_mse) {
      best_mse = rec.val_mse;
      result.params = params;
      result.history.best_epoch = epoch;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.patience) break;
    }
  }
  result.history.best_val_mse = best_mse;
  return result;
}

std::vector<double> predict_ite_all(const TrainResult& result, const Matrix& raw_x) {
  return predict_ite(result.params, result.standardizer.apply(raw_x));
}

std::vector<double> predict_factual(const TrainResult& result, const Matrix& raw_x,
                                    std::span<const std::size_t> rows,
                                    std::span<const int> treatment) {
  const Matrix x = result.standardizer.apply(raw_x);
  Matrix batch(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = x.row(rows[r]);
    std::copy(src.begin(), src.end(), batch.row(r).begin());
  }
  const ForwardResult fwd = forward_both(result.params, batch);
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[r] = treatment[rows[r]] == 1 ? fwd.pred1[r] : fwd.pred0[r];
  }
  return out;
}

bool TrainGrids::empty() const {
  return lambda_o.empty() && lambda_e.empty() && sigma2.empty() && pca_dims.empty() &&
         b1.empty() && b2.empty();
}

std::size_t TrainGrids::trial_count() const {
  auto dim = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
  return dim(lambda_o.size()) * dim(lambda_e.size()) * dim(sigma2.size()) *
         dim(pca_dims.size()) * dim(b1.size()) * dim(b2.size());
}

GridSearchResult grid_search(const Dataset& ds, const SplitIndices& split,
                             const TrainConfig& base, const TrainGrids& grids) {
  if (grids.empty()) throw std::invalid_argument("grid_search: all grids are empty");

  auto values_or = [](const std::vector<double>& grid, double base_value) {
    return grid.empty() ? std::vector<double>{base_value} : grid;
  };
  auto sizes_or = [](const std::vector<std::size_t>& grid, std::size_t base_value) {
    return grid.empty() ? std::vector<std::size_t>{base_value} : grid;
  };
  const auto lambda_os = values_or(grids.lambda_o, base.lambda_o);
  const auto lambda_es = values_or(grids.lambda_e, base.lambda_e);
  const auto sigma2s = values_or(grids.sigma2, base.sigma2);
  const auto pca_dimss = sizes_or(grids.pca_dims, base.pca_dims);
  const auto b1s = sizes_or(grids.b1, base.b1);
  const auto b2s = sizes_or(grids.b2, base.b2);

  GridSearchResult result;
  double best_mse = std::numeric_limits<double>::infinity();
  std::size_t trial_index = 0;
  for (double lo : lambda_os)
    for (double le : lambda_es)
      for (double s2 : sigma2s)
        for (std::size_t pd : pca_dimss)
          for (std::size_t v1 : b1s)
            for (std::size_t v2 : b2s) {
              TrainConfig cfg = base;
              cfg.lambda_o = lo;
              cfg.lambda_e = le;
              cfg.sigma2 = s2;
              cfg.pca_dims = pd;
              cfg.b1 = v1;
              cfg.b2 = v2;
              cfg.seed = derive_seed(base.seed, kStreamGridTrial + trial_index);
              const TrainResult tr = train(ds, split, cfg);
              const double mse = tr.history.best_val_mse;
              result.trials.push_back({cfg, mse});
              const bool better =
                  mse < best_mse ||
                  (mse == best_mse &&
                   std::make_pair(cfg.lambda_o, cfg.lambda_e) <
                       std::make_pair(result.best.lambda_o, result.best.lambda_e));
              if (better) {
                best_mse = mse;
                result.best = cfg;
              }
              ++trial_index;
            }
  return result;
}

}  // namespace cfprop
