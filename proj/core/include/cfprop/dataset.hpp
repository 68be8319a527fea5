#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfprop/matrix.hpp"

namespace cfprop {

/// Covariates plus per-instance treatment/outcome labels. treatment and
/// y_factual are meaningful exactly where labeled[i] is true. mu0/mu1 hold
/// the noiseless potential-outcome means when ground truth is available
/// (synthetic and semi-synthetic data); the true ITE is then mu1 - mu0 for
/// every instance, labeled or not.
struct Dataset {
  Matrix x;
  std::vector<int> treatment;
  std::vector<double> y_factual;
  std::vector<bool> labeled;
  std::optional<std::vector<double>> mu0;
  std::optional<std::vector<double>> mu1;
  std::string name;

  std::size_t n() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
  bool has_ground_truth() const { return mu0.has_value() && mu1.has_value(); }

  /// mu1 - mu0 per instance; requires ground truth.
  std::vector<double> true_ite() const;
};

struct SplitSpec {
  double train_fraction = 0.1;
  double val_fraction = 0.1;
  double test_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Disjoint index partition of a parent Dataset. Train indices form the
/// labeled set during training; val and test double as the unlabeled pool
/// (their labels are hidden from the supervised loss but retained in the
/// parent for validation and evaluation).
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  std::vector<std::size_t> unlabeled() const;  // val followed by test
};

/// Synthetic dataset: x ~ N(0, PSD-repaired 0.5(S + S^T)) with
/// S ~ U((-1,1)^{d x d}); t ~ Bern(sigmoid(w_t^T x + e_t)), e_t ~ N(0, 0.1);
/// mu1 = sin(w_y^T x), mu0 = cos(w_y^T x); y = mu_t + noise_c * e_y with
/// e_y ~ N(0,1) per instance. The symmetrized covariance is made PSD by
/// clipping its eigenvalues at 1e-6 and reconstructing. All instances start
/// labeled; splitting decides the unlabeled pool.
Dataset gen_synthetic(std::size_t n, std::size_t d, double noise_c, std::uint64_t seed);

/// Column mapping for CSV ingestion. Covariates come from the explicit list
/// when non-empty, otherwise from every column whose name starts with
/// covariate_prefix (in header order). mu0/mu1 are read iff their column
/// names are non-empty.
struct CsvSchema {
  std::vector<std::string> covariates;
  std::string covariate_prefix = "x";
  std::string treatment = "t";
  std::string outcome = "y";
  std::string mu0;
  std::string mu1;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes header x1..xd,t,y[,mu0,mu1] with %.17g formatting, so regenerating
/// with the same seed reproduces the file byte for byte.
void write_csv(const Dataset& ds, const std::string& path);

/// Seeded shuffle into train/val/test. Resamples the permutation (up to 100
/// tries) until train contains at least one treated and one control
/// instance.
SplitIndices split(const Dataset& ds, const SplitSpec& spec);

/// Adds N(0, c^2) noise to the outcomes of the given rows (defaults to all
/// labeled rows). mu0/mu1 stay untouched.
Dataset add_label_noise(const Dataset& ds, double c, std::uint64_t seed);
Dataset add_label_noise(const Dataset& ds, double c, std::uint64_t seed,
                        std::span<const std::size_t> rows);

/// Per-column affine transform fitted on training rows only. Columns with
/// zero variance are centered but not rescaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  Matrix apply(const Matrix& x) const;
};

Standardizer fit_standardizer(const Matrix& x, std::span<const std::size_t> train_rows);

}  // namespace cfprop
