#include "cfprop/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "cfprop/baselines.hpp"
#include "cfprop/rng.hpp"

namespace cfprop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Experiment-level sub-stream ids.
enum ExpStream : std::uint64_t {
  kTrialBase = 5000,  // + trial index
  kTrialData = 1,
  kTrialSplit = 2,
  kTrialNoise = 3,
  kTrialMethodBase = 100,  // + method_stream_id
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string csv_num(double v, const char* spec = "%.9g") {
  if (std::isnan(v)) return "na";
  return fmt(spec, v);
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + context);
    }
  }
}

std::vector<Method> parse_methods(const json& arr, const std::string& context,
                                  bool allow_empty = false) {
  std::vector<Method> methods;
  for (const auto& m : arr) {
    const Method parsed = method_from_name(m.get<std::string>());
    if (std::find(methods.begin(), methods.end(), parsed) != methods.end()) {
      throw std::invalid_argument("config: duplicate method '" + m.get<std::string>() +
                                  "' in " + context);
    }
    methods.push_back(parsed);
  }
  if (methods.empty() && !allow_empty) {
    throw std::invalid_argument("config: empty method list in " + context);
  }
  return methods;
}

json methods_to_json(const std::vector<Method>& methods) {
  json arr = json::array();
  for (Method m : methods) arr.push_back(method_name(m));
  return arr;
}

bool is_cp_family(Method m) {
  return m == Method::kCp || m == Method::kCpLo0 || m == Method::kCpLe0 ||
         m == Method::kTarnet;
}

// Structural lambda pins of the cp ablations, applied to both the base
// config and any grid dimensions.
void apply_method_pins(Method m, TrainConfig& cfg, TrainGrids* grids) {
  if (m == Method::kCpLo0 || m == Method::kTarnet) {
    cfg.lambda_o = 0.0;
    if (grids != nullptr) grids->lambda_o = {0.0};
  }
  if (m == Method::kCpLe0 || m == Method::kTarnet) {
    cfg.lambda_e = 0.0;
    if (grids != nullptr) grids->lambda_e = {0.0};
  }
}

double factual_mse_on(const Dataset& ds, std::span<const std::size_t> rows,
                      const ArmPredictions& preds) {
  double mse = 0.0;
  for (std::size_t i : rows) {
    const double pred = ds.treatment[i] == 1 ? preds.y1[i] : preds.y0[i];
    const double resid = ds.y_factual[i] - pred;
    mse += resid * resid;
  }
  return mse / static_cast<double>(rows.size());
}

json report_to_json(const EvalReport& r, std::size_t trial) {
  return json{{"method", r.method},
              {"trial", trial},
              {"trial_seed", r.trial_seed},
              {"sqrt_pehe_labeled", r.sqrt_pehe_labeled},
              {"sqrt_pehe_unlabeled", r.sqrt_pehe_unlabeled},
              {"factual_mse_val", r.factual_mse_val},
              {"n_labeled", r.n_labeled},
              {"n_unlabeled", r.n_unlabeled}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.trial_seed = j.at("trial_seed").get<std::uint64_t>();
  r.sqrt_pehe_labeled = j.at("sqrt_pehe_labeled").get<double>();
  r.sqrt_pehe_unlabeled = j.at("sqrt_pehe_unlabeled").get<double>();
  r.factual_mse_val = j.at("factual_mse_val").get<double>();
  r.n_labeled = j.at("n_labeled").get<std::size_t>();
  r.n_unlabeled = j.at("n_unlabeled").get<std::size_t>();
  return r;
}

void write_summary_files(const TrialSummary& summary, double train_fraction,
                         const std::string& csv_path, const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open '" + csv_path + "' for writing");
  csv << "method,train_fraction,partition,trials,mean,sd,t_vs_ref,p_vs_ref\n";
  for (const auto& m : summary.methods) {
    csv << m.method << "," << csv_num(train_fraction, "%.6g") << ",labeled," << m.trials << ","
        << csv_num(m.mean_labeled) << "," << csv_num(m.sd_labeled) << ","
        << csv_num(m.t_labeled, "%.6g") << "," << csv_num(m.p_labeled, "%.6g") << "\n";
    csv << m.method << "," << csv_num(train_fraction, "%.6g") << ",unlabeled," << m.trials
        << "," << csv_num(m.mean_unlabeled) << "," << csv_num(m.sd_unlabeled) << ","
        << csv_num(m.t_unlabeled, "%.6g") << "," << csv_num(m.p_unlabeled, "%.6g") << "\n";
  }
  csv.close();

  json out;
  out["reference"] = summary.reference;
  out["train_fraction"] = train_fraction;
  out["methods"] = json::array();
  for (const auto& m : summary.methods) {
    out["methods"].push_back({{"method", m.method},
                              {"trials", m.trials},
                              {"mean_labeled", m.mean_labeled},
                              {"sd_labeled", m.sd_labeled},
                              {"mean_unlabeled", m.mean_unlabeled},
                              {"sd_unlabeled", m.sd_unlabeled},
                              {"t_labeled", m.t_labeled},
                              {"p_labeled", m.p_labeled},
                              {"t_unlabeled", m.t_unlabeled},
                              {"p_unlabeled", m.p_unlabeled}});
  }
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot open '" + json_path + "' for writing");
  js << out.dump(2) << "\n";
}

void print_summary(const TrialSummary& summary) {
  std::printf("%-10s %6s  %-16s %-16s %10s %10s\n", "method", "trials", "labeled",
              "unlabeled", "p_lab", "p_unl");
  for (const auto& m : summary.methods) {
    std::printf("%-10s %6zu  %-16s %-16s %10s %10s\n", m.method.c_str(), m.trials,
                format_mean_sd(m.mean_labeled, m.sd_labeled).c_str(),
                format_mean_sd(m.mean_unlabeled, m.sd_unlabeled).c_str(),
                csv_num(m.p_labeled, "%.4g").c_str(), csv_num(m.p_unlabeled, "%.4g").c_str());
  }
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kCp: return "cp";
    case Method::kCpLo0: return "cp_lo0";
    case Method::kCpLe0: return "cp_le0";
    case Method::kTarnet: return "tarnet";
    case Method::kRidge1: return "ridge1";
    case Method::kRidge2: return "ridge2";
    case Method::kKnn: return "knn";
    case Method::kPsm: return "psm";
  }
  throw std::logic_error("method_name: bad enum");
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::kCp, Method::kCpLo0, Method::kCpLe0, Method::kTarnet,
                   Method::kRidge1, Method::kRidge2, Method::kKnn, Method::kPsm}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("config: unknown method '" + name + "'");
}

std::uint64_t method_stream_id(Method m) { return static_cast<std::uint64_t>(m); }

ExperimentConfig parse_config(const json& j) {
  check_keys(j,
             {"dataset", "split", "trials", "seed", "methods", "train", "grids",
              "noise_levels", "baselines", "output_dir"},
             "top level");
  ExperimentConfig cfg;

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    const std::string type = d.value("type", "synthetic");
    if (type == "synthetic") {
      check_keys(d, {"type", "n", "d", "noise_c"}, "dataset");
      SyntheticSpec spec;
      spec.n = d.value("n", spec.n);
      spec.d = d.value("d", spec.d);
      spec.noise_c = d.value("noise_c", spec.noise_c);
      if (spec.n == 0 || spec.d == 0) {
        throw std::invalid_argument("config: dataset.n and dataset.d must be positive");
      }
      cfg.dataset = spec;
    } else if (type == "csv") {
      check_keys(d,
                 {"type", "path", "covariates", "covariate_prefix", "treatment", "outcome",
                  "mu0", "mu1"},
                 "dataset");
      CsvSpec spec;
      spec.path = d.at("path").get<std::string>();
      if (d.contains("covariates")) {
        spec.schema.covariates = d.at("covariates").get<std::vector<std::string>>();
      }
      spec.schema.covariate_prefix = d.value("covariate_prefix", spec.schema.covariate_prefix);
      spec.schema.treatment = d.value("treatment", spec.schema.treatment);
      spec.schema.outcome = d.value("outcome", spec.schema.outcome);
      spec.schema.mu0 = d.value("mu0", spec.schema.mu0);
      spec.schema.mu1 = d.value("mu1", spec.schema.mu1);
      cfg.dataset = spec;
    } else {
      throw std::invalid_argument("config: dataset.type must be 'synthetic' or 'csv'");
    }
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, {"train_fraction", "val_fraction", "test_fraction"}, "split");
    cfg.train_fraction = s.value("train_fraction", cfg.train_fraction);
    cfg.val_fraction = s.value("val_fraction", cfg.val_fraction);
    cfg.test_fraction = s.value("test_fraction", cfg.test_fraction);
  }
  cfg.trials = j.value("trials", cfg.trials);
  if (cfg.trials == 0) throw std::invalid_argument("config: trials must be >= 1");
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("methods")) cfg.methods = parse_methods(j.at("methods"), "methods");

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t,
               {"lambda_o", "lambda_e", "sigma2", "pca_dims", "b1", "b2", "lr", "max_epochs",
                "warmup_epochs", "decay_rate", "patience", "arch", "standardize",
                "graph_top_k"},
               "train");
    TrainConfig& tc = cfg.train;
    tc.lambda_o = t.value("lambda_o", tc.lambda_o);
    tc.lambda_e = t.value("lambda_e", tc.lambda_e);
    tc.sigma2 = t.value("sigma2", tc.sigma2);
    tc.pca_dims = t.value("pca_dims", tc.pca_dims);
    tc.b1 = t.value("b1", tc.b1);
    tc.b2 = t.value("b2", tc.b2);
    tc.lr = t.value("lr", tc.lr);
    tc.max_epochs = t.value("max_epochs", tc.max_epochs);
    tc.warmup_epochs = t.value("warmup_epochs", tc.warmup_epochs);
    tc.decay_rate = t.value("decay_rate", tc.decay_rate);
    tc.patience = t.value("patience", tc.patience);
    if (t.contains("arch")) {
      const json& a = t.at("arch");
      check_keys(a, {"shared_widths", "head_widths"}, "train.arch");
      tc.arch.shared_widths =
          a.value("shared_widths", tc.arch.shared_widths);
      tc.arch.head_widths = a.value("head_widths", tc.arch.head_widths);
    }
    tc.standardize = t.value("standardize", tc.standardize);
    const std::size_t top_k = t.value("graph_top_k", std::size_t{0});
    tc.graph_top_k = top_k == 0 ? std::nullopt : std::optional<std::size_t>(top_k);
    tc.validate();
  }

  if (j.contains("grids")) {
    const json& g = j.at("grids");
    check_keys(g, {"methods", "lambda_o", "lambda_e", "sigma2", "pca_dims", "b1", "b2"},
               "grids");
    if (g.contains("methods")) {
      cfg.grid_methods = parse_methods(g.at("methods"), "grids", /*allow_empty=*/true);
    }
    cfg.grids.lambda_o = g.value("lambda_o", cfg.grids.lambda_o);
    cfg.grids.lambda_e = g.value("lambda_e", cfg.grids.lambda_e);
    cfg.grids.sigma2 = g.value("sigma2", cfg.grids.sigma2);
    cfg.grids.pca_dims = g.value("pca_dims", cfg.grids.pca_dims);
    cfg.grids.b1 = g.value("b1", cfg.grids.b1);
    cfg.grids.b2 = g.value("b2", cfg.grids.b2);
    for (Method m : cfg.grid_methods) {
      if (!is_cp_family(m)) {
        throw std::invalid_argument("config: grid search applies only to cp-family methods");
      }
    }
  }

  if (j.contains("noise_levels")) {
    cfg.noise_levels = j.at("noise_levels").get<std::vector<double>>();
    if (cfg.noise_levels.empty()) {
      throw std::invalid_argument("config: noise_levels must be non-empty");
    }
    for (double c : cfg.noise_levels) {
      if (c < 0.0) throw std::invalid_argument("config: noise levels must be >= 0");
    }
  }

  if (j.contains("baselines")) {
    const json& b = j.at("baselines");
    check_keys(b, {"knn_k", "psm_k", "ridge_lambda"}, "baselines");
    cfg.baselines.knn_k = b.value("knn_k", cfg.baselines.knn_k);
    cfg.baselines.psm_k = b.value("psm_k", cfg.baselines.psm_k);
    cfg.baselines.ridge_lambda = b.value("ridge_lambda", cfg.baselines.ridge_lambda);
    if (cfg.baselines.knn_k == 0 || cfg.baselines.psm_k == 0) {
      throw std::invalid_argument("config: baseline k values must be >= 1");
    }
  }

  cfg.output_dir = j.value("output_dir", cfg.output_dir);

  const double frac_sum = cfg.train_fraction + cfg.val_fraction + cfg.test_fraction;
  if (std::abs(frac_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("config: split fractions sum to " + std::to_string(frac_sum));
  }
  return cfg;
}

json serialize_config(const ExperimentConfig& cfg) {
  json j;
  if (std::holds_alternative<SyntheticSpec>(cfg.dataset)) {
    const auto& s = std::get<SyntheticSpec>(cfg.dataset);
    j["dataset"] = {{"type", "synthetic"}, {"n", s.n}, {"d", s.d}, {"noise_c", s.noise_c}};
  } else {
    const auto& s = std::get<CsvSpec>(cfg.dataset);
    j["dataset"] = {{"type", "csv"},
                    {"path", s.path},
                    {"covariates", s.schema.covariates},
                    {"covariate_prefix", s.schema.covariate_prefix},
                    {"treatment", s.schema.treatment},
                    {"outcome", s.schema.outcome},
                    {"mu0", s.schema.mu0},
                    {"mu1", s.schema.mu1}};
  }
  j["split"] = {{"train_fraction", cfg.train_fraction},
                {"val_fraction", cfg.val_fraction},
                {"test_fraction", cfg.test_fraction}};
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["methods"] = methods_to_json(cfg.methods);
  j["train"] = {{"lambda_o", cfg.train.lambda_o},
                {"lambda_e", cfg.train.lambda_e},
                {"sigma2", cfg.train.sigma2},
                {"pca_dims", cfg.train.pca_dims},
                {"b1", cfg.train.b1},
                {"b2", cfg.train.b2},
                {"lr", cfg.train.lr},
                {"max_epochs", cfg.train.max_epochs},
                {"warmup_epochs", cfg.train.warmup_epochs},
                {"decay_rate", cfg.train.decay_rate},
                {"patience", cfg.train.patience},
                {"arch",
                 {{"shared_widths", cfg.train.arch.shared_widths},
                  {"head_widths", cfg.train.arch.head_widths}}},
                {"standardize", cfg.train.standardize},
                {"graph_top_k", cfg.train.graph_top_k.value_or(0)}};
  j["grids"] = {{"methods", methods_to_json(cfg.grid_methods)},
                {"lambda_o", cfg.grids.lambda_o},
                {"lambda_e", cfg.grids.lambda_e},
                {"sigma2", cfg.grids.sigma2},
                {"pca_dims", cfg.grids.pca_dims},
                {"b1", cfg.grids.b1},
                {"b2", cfg.grids.b2}};
  j["noise_levels"] = cfg.noise_levels;
  j["baselines"] = {{"knn_k", cfg.baselines.knn_k},
                    {"psm_k", cfg.baselines.psm_k},
                    {"ridge_lambda", cfg.baselines.ridge_lambda}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

namespace {

json parse_override_value(const std::string& text) {
  const json parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  return json(text);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw std::invalid_argument("override '" + assignment + "': empty key");
    if (dot == std::string::npos) {
      (*node)[key] = parse_override_value(assignment.substr(eq + 1));
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: '" + path + "' is not valid JSON: " + e.what());
  }
  for (const auto& ov : overrides) apply_override(j, ov);
  return parse_config(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = serialize_config(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct TrialOutput {
  std::vector<EvalReport> reports;
  std::vector<TrialFailure> failures;
};

TrialOutput run_trial(const ExperimentConfig& cfg, const Dataset* shared_csv,
                      std::size_t trial, std::optional<double> label_noise_c) {
  TrialOutput out;
  const std::uint64_t trial_seed = derive_seed(cfg.seed, kTrialBase + trial);
  try {
    Dataset ds = std::holds_alternative<SyntheticSpec>(cfg.dataset)
                     ? gen_synthetic(std::get<SyntheticSpec>(cfg.dataset).n,
                                     std::get<SyntheticSpec>(cfg.dataset).d,
                                     std::get<SyntheticSpec>(cfg.dataset).noise_c,
                                     derive_seed(trial_seed, kTrialData))
                     : *shared_csv;

    SplitSpec spec;
    spec.train_fraction = cfg.train_fraction;
    spec.val_fraction = cfg.val_fraction;
    spec.test_fraction = cfg.test_fraction;
    spec.seed = derive_seed(trial_seed, kTrialSplit);
    const SplitIndices idx = split(ds, spec);

    if (label_noise_c.has_value()) {
      ds = add_label_noise(ds, *label_noise_c, derive_seed(trial_seed, kTrialNoise),
                           idx.train);
    }

    // Baselines see the same standardization the trainer applies internally.
    Dataset ds_base = ds;
    if (cfg.train.standardize) {
      ds_base.x = fit_standardizer(ds.x, idx.train).apply(ds.x);
    }

    for (Method m : cfg.methods) {
      const std::string name = method_name(m);
      try {
        std::vector<double> tau;
        double val_mse = 0.0;
        if (is_cp_family(m)) {
          TrainConfig tc = cfg.train;
          tc.seed = derive_seed(trial_seed, kTrialMethodBase + method_stream_id(m));
          const bool use_grid =
              std::find(cfg.grid_methods.begin(), cfg.grid_methods.end(), m) !=
              cfg.grid_methods.end();
          if (use_grid) {
            TrainGrids grids = cfg.grids;
            apply_method_pins(m, tc, &grids);
            const GridSearchResult gs = grid_search(ds, idx, tc, grids);
            tc = gs.best;
          } else {
            apply_method_pins(m, tc, nullptr);
          }
          const TrainResult result = train(ds, idx, tc);
          tau = predict_ite_all(result, ds.x);
          val_mse = result.history.best_val_mse;
        } else {
          ArmPredictions preds;
          switch (m) {
            case Method::kRidge1:
              preds = ridge1_predict(ds_base, idx.train, ds_base.x, cfg.baselines.ridge_lambda);
              break;
            case Method::kRidge2:
              preds = ridge2_predict(ds_base, idx.train, ds_base.x, cfg.baselines.ridge_lambda);
              break;
            case Method::kKnn:
              preds = knn_predict(ds_base, idx.train, ds_base.x, cfg.baselines.knn_k);
              break;
            case Method::kPsm:
              preds = psm_predict(ds_base, idx.train, ds_base.x, cfg.baselines.psm_k);
              break;
            default:
              throw std::logic_error("unhandled baseline");
          }
          tau = preds.ite();
          val_mse = factual_mse_on(ds_base, idx.val, preds);
        }
        out.reports.push_back(evaluate_method(ds, idx, tau, name, trial_seed, val_mse));
      } catch (const std::exception& e) {
        out.failures.push_back({trial, name, e.what()});
      }
    }
  } catch (const std::exception& e) {
    out.failures.push_back({trial, "*", e.what()});
  }
  return out;
}

RunResult run_impl(const ExperimentConfig& cfg, const RunOptions& opts,
                   std::optional<double> label_noise_c, const std::string& out_dir) {
  const Dataset shared_csv = std::holds_alternative<CsvSpec>(cfg.dataset)
                                 ? load_csv(std::get<CsvSpec>(cfg.dataset).path,
                                            std::get<CsvSpec>(cfg.dataset).schema)
                                 : Dataset{};
  const Dataset* csv_ptr =
      std::holds_alternative<CsvSpec>(cfg.dataset) ? &shared_csv : nullptr;

  std::vector<TrialOutput> outputs(cfg.trials);
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, cfg.trials));
  auto worker = [&]() {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= cfg.trials) break;
      outputs[t] = run_trial(cfg, csv_ptr, t, label_noise_c);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunResult result;
  fs::create_directories(fs::path(out_dir) / "trials");
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    for (const auto& r : outputs[t].reports) {
      char name[64];
      std::snprintf(name, sizeof(name), "trial%03zu_%s.json", t, r.method.c_str());
      std::ofstream f(fs::path(out_dir) / "trials" / name);
      f << report_to_json(r, t).dump(2) << "\n";
    }
    for (const auto& fail : outputs[t].failures) result.failures.push_back(fail);
  }

  // Aggregate over complete trials only, so paired tests stay paired.
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    if (outputs[t].reports.size() == cfg.methods.size()) {
      result.reports.insert(result.reports.end(), outputs[t].reports.begin(),
                            outputs[t].reports.end());
    }
  }
  if (result.reports.empty()) {
    throw std::runtime_error("cmd_run: no complete trial; first failure: " +
                             (result.failures.empty() ? std::string("none recorded")
                                                      : result.failures.front().method + ": " +
                                                            result.failures.front().message));
  }

  std::string reference = method_name(cfg.methods.front());
  for (Method m : cfg.methods) {
    if (m == Method::kCp) reference = "cp";
  }
  result.summary = aggregate(result.reports, reference);

  result.summary_csv_path = (fs::path(out_dir) / "summary.csv").string();
  result.summary_json_path = (fs::path(out_dir) / "summary.json").string();
  write_summary_files(result.summary, cfg.train_fraction, result.summary_csv_path,
                      result.summary_json_path);

  json manifest;
  manifest["artifact"] = "cfprop";
  manifest["version"] = "0.1.0";
  manifest["config_hash"] = config_hash(cfg);
  manifest["config"] = serialize_config(cfg);
  manifest["label_noise_c"] = label_noise_c.has_value() ? json(*label_noise_c) : json(nullptr);
  manifest["trial_seeds"] = json::array();
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    manifest["trial_seeds"].push_back(derive_seed(cfg.seed, kTrialBase + t));
  }
  json fails = json::array();
  for (const auto& f : result.failures) {
    fails.push_back({{"trial", f.trial}, {"method", f.method}, {"message", f.message}});
  }
  manifest["failures"] = fails;
  std::ofstream mf(fs::path(out_dir) / "MANIFEST.json");
  mf << manifest.dump(2) << "\n";

  // A method that failed every trial fails the run.
  for (Method m : cfg.methods) {
    const std::string name = method_name(m);
    bool any = false;
    for (const auto& r : result.reports) any = any || r.method == name;
    if (!any) result.ok = false;
  }
  if (!opts.quiet) print_summary(result.summary);
  return result;
}

}  // namespace

std::string cmd_gen(const ExperimentConfig& cfg) {
  if (!std::holds_alternative<SyntheticSpec>(cfg.dataset)) {
    throw std::invalid_argument("cmd_gen: config must declare a synthetic dataset");
  }
  const auto& spec = std::get<SyntheticSpec>(cfg.dataset);
  const Dataset ds = gen_synthetic(spec.n, spec.d, spec.noise_c, cfg.seed);
  fs::create_directories(cfg.output_dir);
  const std::string path = (fs::path(cfg.output_dir) / "dataset.csv").string();
  write_csv(ds, path);
  std::printf("wrote %s (n=%zu, d=%zu, noise_c=%s, seed=%llu)\n", path.c_str(), spec.n,
              spec.d, fmt("%g", spec.noise_c).c_str(),
              static_cast<unsigned long long>(cfg.seed));
  return path;
}

RunResult cmd_run(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_impl(cfg, opts, std::nullopt, cfg.output_dir);
}

NoiseResult cmd_noise(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (cfg.noise_levels.empty()) {
    throw std::invalid_argument("cmd_noise: noise_levels must be non-empty");
  }
  NoiseResult result;
  for (double c : cfg.noise_levels) {
    const std::string sub =
        (fs::path(cfg.output_dir) / ("noise_c" + fmt("%g", c))).string();
    RunOptions sub_opts = opts;
    sub_opts.quiet = true;
    const RunResult run = run_impl(cfg, sub_opts, c, sub);
    result.ok = result.ok && run.ok;
    result.by_level.emplace_back(c, run.summary);
  }

  fs::create_directories(cfg.output_dir);
  result.summary_csv_path = (fs::path(cfg.output_dir) / "noise_summary.csv").string();
  std::ofstream csv(result.summary_csv_path);
  if (!csv) throw std::runtime_error("cannot open '" + result.summary_csv_path + "'");
  csv << "method,c,partition,trials,mean,sd\n";
  for (const auto& [c, summary] : result.by_level) {
    for (const auto& m : summary.methods) {
      csv << m.method << "," << fmt("%g", c) << ",labeled," << m.trials << ","
          << csv_num(m.mean_labeled) << "," << csv_num(m.sd_labeled) << "\n";
      csv << m.method << "," << fmt("%g", c) << ",unlabeled," << m.trials << ","
          << csv_num(m.mean_unlabeled) << "," << csv_num(m.sd_unlabeled) << "\n";
    }
  }
  if (!opts.quiet) {
    for (const auto& [c, summary] : result.by_level) {
      std::printf("--- label noise c = %s ---\n", fmt("%g", c).c_str());
      print_summary(summary);
    }
  }
  return result;
}

RunResult cmd_report(const std::string& dir, const std::string& reference) {
  const fs::path trials_dir = fs::path(dir) / "trials";
  if (!fs::is_directory(trials_dir)) {
    throw std::invalid_argument("cmd_report: '" + trials_dir.string() + "' is not a directory");
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(trials_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("cmd_report: no trial reports found");

  RunResult result;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    in >> j;
    result.reports.push_back(report_from_json(j));
  }
  std::string ref = reference;
  bool has_ref = false;
  for (const auto& r : result.reports) has_ref = has_ref || r.method == ref;
  if (!has_ref) ref = result.reports.front().method;

  result.summary = aggregate(result.reports, ref);
  const double frac =
      static_cast<double>(result.reports.front().n_labeled) /
      static_cast<double>(result.reports.front().n_labeled + result.reports.front().n_unlabeled);
  result.summary_csv_path = (fs::path(dir) / "summary.csv").string();
  result.summary_json_path = (fs::path(dir) / "summary.json").string();
  write_summary_files(result.summary, frac, result.summary_csv_path, result.summary_json_path);
  print_summary(result.summary);
  return result;
}

}  // namespace cfprop
