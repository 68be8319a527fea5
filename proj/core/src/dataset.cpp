#include "cfprop/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfprop/rng.hpp"

namespace cfprop {

namespace {

// Sub-stream ids of the synthetic generator, one per random component.
enum GenStream : std::uint64_t {
  kGenCovariance = 1,
  kGenX = 2,
  kGenTreatWeights = 3,
  kGenTreatNoise = 4,
  kGenTreatDraw = 5,
  kGenOutcomeWeights = 6,
  kGenOutcomeNoise = 7,
};

constexpr std::uint64_t kLabelNoiseStream = 11;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> Dataset::true_ite() const {
  if (!has_ground_truth()) {
    throw std::runtime_error("Dataset '" + name + "' has no mu0/mu1 ground truth");
  }
  std::vector<double> tau(n());
  for (std::size_t i = 0; i < n(); ++i) tau[i] = (*mu1)[i] - (*mu0)[i];
  return tau;
}

void SplitSpec::validate() const {
  if (train_fraction <= 0.0 || train_fraction >= 1.0 ||
      val_fraction < 0.0 || test_fraction < 0.0) {
    throw std::invalid_argument("SplitSpec: fractions out of range");
  }
  const double sum = train_fraction + val_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("SplitSpec: fractions sum to " + std::to_string(sum) +
                                ", expected 1");
  }
}

std::vector<std::size_t> SplitIndices::unlabeled() const {
  std::vector<std::size_t> u = val;
  u.insert(u.end(), test.begin(), test.end());
  return u;
}

Dataset gen_synthetic(std::size_t n, std::size_t d, double noise_c, std::uint64_t seed) {
  if (n < 2 || d < 1) {
    throw std::invalid_argument("gen_synthetic: need n >= 2 and d >= 1, got n=" +
                                std::to_string(n) + " d=" + std::to_string(d));
  }
  const Rng root(seed);

  // Random covariance: symmetrize S ~ U((-1,1)^{d x d}), then repair to PSD
  // by clipping eigenvalues at 1e-6 and reconstructing.
  Rng rng_cov = root.derive(kGenCovariance);
  Matrix sigma(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) sigma(i, j) = rng_cov.uniform(-1.0, 1.0);
  Matrix sym(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) sym(i, j) = 0.5 * (sigma(i, j) + sigma(j, i));
  const EighResult eig = eigh_symmetric(sym);

  // Rows of x are V sqrt(clip(lambda)) z with z ~ N(0, I_d), which realizes
  // covariance V clip(lambda) V^T.
  Rng rng_x = root.derive(kGenX);
  Matrix x(n, d);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      z[k] = std::sqrt(std::max(eig.eigenvalues[k], 1e-6)) * rng_x.normal();
    }
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += eig.eigenvectors(j, k) * z[k];
      x(i, j) = s;
    }
  }

  Rng rng_wt = root.derive(kGenTreatWeights);
  std::vector<double> w_t(d);
  for (auto& w : w_t) w = rng_wt.uniform(-1.0, 1.0);

  Rng rng_et = root.derive(kGenTreatNoise);
  Rng rng_t = root.derive(kGenTreatDraw);
  std::vector<int> treatment(n);
  const double treat_noise_sd = std::sqrt(0.1);
  for (std::size_t i = 0; i < n; ++i) {
    double logit = 0.0;
    for (std::size_t j = 0; j < d; ++j) logit += w_t[j] * x(i, j);
    logit += rng_et.normal(0.0, treat_noise_sd);
    treatment[i] = rng_t.bernoulli(sigmoid(logit)) ? 1 : 0;
  }

  Rng rng_wy = root.derive(kGenOutcomeWeights);
  std::vector<double> w_y(d);
  for (auto& w : w_y) w = rng_wy.uniform(-1.0, 1.0);

  Rng rng_ey = root.derive(kGenOutcomeNoise);
  std::vector<double> mu0(n), mu1(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += w_y[j] * x(i, j);
    mu1[i] = std::sin(s);
    mu0[i] = std::cos(s);
    y[i] = (treatment[i] == 1 ? mu1[i] : mu0[i]) + noise_c * rng_ey.normal();
  }

  Dataset ds;
  ds.x = std::move(x);
  ds.treatment = std::move(treatment);
  ds.y_factual = std::move(y);
  ds.labeled.assign(n, true);
  ds.mu0 = std::move(mu0);
  ds.mu1 = std::move(mu1);
  ds.name = "synthetic";
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  // Trailing whitespace is tolerated, anything else is not.
  while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
  if (cell.empty() || pos != cell.size() || !std::isfinite(v)) {
    throw std::runtime_error("load_csv: non-numeric cell '" + cell + "' at row " +
                             std::to_string(row) + ", column '" + col + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path + "'");
  const std::vector<std::string> header = split_line(line);

  auto find_col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("load_csv: missing column '" + name + "' in '" + path + "'");
  };

  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  if (!schema.covariates.empty()) {
    for (const auto& name : schema.covariates) {
      cov_cols.push_back(find_col(name));
      cov_names.push_back(name);
    }
  } else {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i].rfind(schema.covariate_prefix, 0) == 0 && header[i] != schema.treatment &&
          header[i] != schema.outcome && header[i] != schema.mu0 && header[i] != schema.mu1) {
        cov_cols.push_back(i);
        cov_names.push_back(header[i]);
      }
    }
    if (cov_cols.empty()) {
      throw std::runtime_error("load_csv: no covariate column matches prefix '" +
                               schema.covariate_prefix + "' in '" + path + "'");
    }
  }
  const std::size_t t_col = find_col(schema.treatment);
  const std::size_t y_col = find_col(schema.outcome);
  const bool want_mu = !schema.mu0.empty() || !schema.mu1.empty();
  std::size_t mu0_col = 0, mu1_col = 0;
  if (want_mu) {
    mu0_col = find_col(schema.mu0);
    mu1_col = find_col(schema.mu1);
  }

  std::vector<double> xdata;
  std::vector<int> treatment;
  std::vector<double> y, mu0, mu1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      xdata.push_back(parse_cell(fields[cov_cols[c]], row, cov_names[c]));
    }
    const double t = parse_cell(fields[t_col], row, schema.treatment);
    if (t != 0.0 && t != 1.0) {
      throw std::runtime_error("load_csv: treatment value " + format_double(t) + " at row " +
                               std::to_string(row) + " is not in {0,1}");
    }
    treatment.push_back(static_cast<int>(t));
    y.push_back(parse_cell(fields[y_col], row, schema.outcome));
    if (want_mu) {
      mu0.push_back(parse_cell(fields[mu0_col], row, schema.mu0));
      mu1.push_back(parse_cell(fields[mu1_col], row, schema.mu1));
    }
  }
  if (row == 0) throw std::runtime_error("load_csv: no data rows in '" + path + "'");

  Dataset ds;
  ds.x = Matrix(row, cov_cols.size(), std::move(xdata));
  ds.treatment = std::move(treatment);
  ds.y_factual = std::move(y);
  ds.labeled.assign(row, true);
  if (want_mu) {
    ds.mu0 = std::move(mu0);
    ds.mu1 = std::move(mu1);
  }
  ds.name = path;
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < ds.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "t,y";
  if (ds.has_ground_truth()) out << ",mu0,mu1";
  out << "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) out << format_double(ds.x(i, j)) << ",";
    out << ds.treatment[i] << "," << format_double(ds.y_factual[i]);
    if (ds.has_ground_truth()) {
      out << "," << format_double((*ds.mu0)[i]) << "," << format_double((*ds.mu1)[i]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_csv: write to '" + path + "' failed");
}

SplitIndices split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = ds.n();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * n + 0.5));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * n + 0.5));
  if (n_train < 2 || n_train + n_val > n) {
    throw std::invalid_argument("split: fractions give train=" + std::to_string(n_train) +
                                " val=" + std::to_string(n_val) + " on n=" + std::to_string(n));
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (int attempt = 0; attempt < 100; ++attempt) {
    rng.shuffle(perm);
    bool has_treated = false, has_control = false;
    for (std::size_t i = 0; i < n_train; ++i) {
      if (!ds.labeled[perm[i]]) {
        has_treated = false;  // unlabeled instance cannot sit in train
        break;
      }
      (ds.treatment[perm[i]] == 1 ? has_treated : has_control) = true;
    }
    if (has_treated && has_control) {
      SplitIndices s;
      s.train.assign(perm.begin(), perm.begin() + n_train);
      s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
      s.test.assign(perm.begin() + n_train + n_val, perm.end());
      return s;
    }
  }
  throw std::runtime_error(
      "split: could not produce a train set with both treatment arms after 100 tries");
}

Dataset add_label_noise(const Dataset& ds, double c, std::uint64_t seed) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.labeled[i]) rows.push_back(i);
  return add_label_noise(ds, c, seed, rows);
}

Dataset add_label_noise(const Dataset& ds, double c, std::uint64_t seed,
                        std::span<const std::size_t> rows) {
  if (c < 0.0) throw std::invalid_argument("add_label_noise: c must be >= 0");
  Dataset out = ds;
  Rng rng = Rng(seed).derive(kLabelNoiseStream);
  for (std::size_t i : rows) {
    if (!out.labeled[i]) {
      throw std::invalid_argument("add_label_noise: row " + std::to_string(i) +
                                  " is unlabeled");
    }
    out.y_factual[i] += c * rng.normal();
  }
  return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw std::invalid_argument("Standardizer: expected " + std::to_string(mean.size()) +
                                " columns, got " + std::to_string(x.cols()));
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
  return out;
}

Standardizer fit_standardizer(const Matrix& x, std::span<const std::size_t> train_rows) {
  if (train_rows.empty()) throw std::invalid_argument("fit_standardizer: no training rows");
  const std::size_t d = x.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i : train_rows) m += x(i, j);
    m /= static_cast<double>(train_rows.size());
    double var = 0.0;
    for (std::size_t i : train_rows) {
      const double dev = x(i, j) - m;
      var += dev * dev;
    }
    var /= static_cast<double>(train_rows.size());
    s.mean[j] = m;
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

}  // namespace cfprop
