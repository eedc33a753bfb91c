#include "edfvae/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "edfvae/activity.hpp"
#include "edfvae/io.hpp"
#include "edfvae/svg.hpp"

namespace edfvae {

namespace {

namespace fs = std::filesystem;

bool ends_with(const std::string& text, const std::string& suffix) {
  return text.size() >= suffix.size() &&
         text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool looks_like_idx(const std::string& path) {
  return ends_with(path, ".idx") || ends_with(path, "-ubyte") ||
         ends_with(path, ".idx3-ubyte") || ends_with(path, ".idx1-ubyte");
}

Matrix load_matrix_file(const std::string& path,
                        const ExperimentConfig& config) {
  if (!fs::exists(path)) {
    throw ConfigError("dataset file not found: " + path);
  }
  if (looks_like_idx(path)) {
    return load_idx(path);
  }
  return load_csv(path, config.csv_has_header, config.allow_raw);
}

std::string output_path(const ExperimentConfig& config,
                        const std::string& name) {
  const fs::path dir = resolve_output_dir(config);
  fs::create_directories(dir);
  return (dir / name).string();
}

std::string beta_tag(double beta) {
  std::string tag = format_double(beta);
  for (char& c : tag) {
    if (c == '.') {
      c = 'p';
    }
  }
  return tag;
}

TrainConfig train_config_from(const ExperimentConfig& config,
                              std::uint64_t seed) {
  TrainConfig out;
  out.batch = config.batch;
  out.total_batches = config.total_batches;
  out.lr = config.lr;
  out.eval_every = config.eval_every;
  out.eval_mc = config.eval_mc;
  out.train_mc = config.train_mc;
  out.seed = seed;
  return out;
}

/// Objective value and expected remainder at the MLE, written to lhat.txt.
struct MleSummary {
  double lhat = 0.0;
  double expected_r2 = 0.0;
};

MleSummary summarize_mle(const MleSolution& sol, const Matrix& train) {
  MleSummary summary;
  summary.lhat =
      objective_hat(sol.decoder(), train, sol.family, sol.beta);
  const Vector x_bar = train.colwise().mean().transpose();
  const VariationalOptima opt = variational_optima(sol, x_bar);
  const Matrix mu = (train * opt.mu_map_weight.transpose()).rowwise() +
                    opt.mu_map_bias.transpose();
  summary.expected_r2 =
      expected_remainder(sol.decoder(), mu, opt.sigma_z, sol.family);
  return summary;
}

void write_lhat(const std::string& path, const MleSummary& summary) {
  std::ofstream out(path);
  out << "objective_hat = " << format_double(summary.lhat) << '\n';
  out << "expected_remainder = " << format_double(summary.expected_r2)
      << '\n';
}

struct AggregatePoint {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

AggregatePoint aggregate(const std::vector<double>& values) {
  AggregatePoint point;
  const double n = static_cast<double>(values.size());
  for (double v : values) {
    point.mean += v;
  }
  point.mean /= n;
  double var = 0.0;
  for (double v : values) {
    var += (v - point.mean) * (v - point.mean);
  }
  var = values.size() > 1 ? var / (n - 1.0) : 0.0;
  const double half = 1.96 * std::sqrt(var / n);
  point.ci_low = point.mean - half;
  point.ci_high = point.mean + half;
  return point;
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& config) {
  if (config.dataset == "synthetic") {
    if (config.synth_d < 40) {
      throw ConfigError("config: synth_d must be >= 40");
    }
    return synthetic_bernoulli(config.synth_n, config.synth_d,
                               config.synth_seed);
  }
  Matrix all = load_matrix_file(config.dataset, config);
  if (config.limit_rows > 0 && config.limit_rows < all.rows()) {
    all = all.topRows(config.limit_rows).eval();
  }
  const std::string name = fs::path(config.dataset).stem().string();
  if (!config.dataset_test.empty()) {
    Dataset out;
    out.name = name;
    out.train = std::move(all);
    out.test = load_matrix_file(config.dataset_test, config);
    if (out.test.cols() != out.train.cols()) {
      throw ConfigError("dataset: train/test column mismatch");
    }
    return out;
  }
  return split_rows(all, config.split_fraction, name);
}

EdfFamily family_from_config(const ExperimentConfig& config) {
  const FamilyKind kind = family_kind_from_string(config.family);
  switch (kind) {
    case FamilyKind::kGaussian:
      return EdfFamily::gaussian(config.phi > 0.0 ? config.phi : 1.0);
    case FamilyKind::kBernoulli:
      return EdfFamily::bernoulli(config.rho);
    case FamilyKind::kBinomial:
      return EdfFamily::binomial(config.trials_n);
    case FamilyKind::kPoisson:
      return EdfFamily::poisson();
  }
  throw ConfigError("config: unknown family");
}

VaeModel build_model_from_config(const ExperimentConfig& config, Index d,
                                 double beta) {
  return build_architecture(architecture_from_string(config.architecture), d,
                            config.kappa, family_from_config(config),
                            config.hidden_scale, beta);
}

VaeModel make_initialized_model(const ExperimentConfig& config,
                                const Dataset& data, double beta,
                                std::uint64_t seed, const MleSolution* sol) {
  VaeModel model = build_model_from_config(config, data.train.cols(), beta);
  Rng rng = Rng(seed).split(7);
  if (config.init == "mle_b") {
    if (sol == nullptr) {
      throw std::logic_error("make_initialized_model: missing MLE solution");
    }
    // The Gaussian observation variance defaults to the estimated sigma2.
    if (model.family.kind == FamilyKind::kGaussian && config.phi <= 0.0) {
      model.family.dispersion_phi = sol->family.dispersion_phi;
    }
    const Vector x_bar = data.train.colwise().mean().transpose();
    init_mle_b(model, *sol, x_bar, rng, config.mle_b_identity_trunk);
  } else {
    init_bench(model, rng);
  }
  return model;
}

void cmd_mle(const ExperimentConfig& config) {
  const Dataset data = load_dataset(config);
  const EdfFamily family = family_from_config(config);
  MleSolution sol;
  try {
    sol = mle_fit(data.train, family, config.beta, config.kappa);
  } catch (const std::invalid_argument& err) {
    throw NumericError(err.what());
  }
  save_mle_solution(output_path(config, "mle.bin"), sol);
  write_mle_csv(output_path(config, "mle.csv"), sol);
  if (config.beta > 0.0) {
    write_lhat(output_path(config, "lhat.txt"),
               summarize_mle(sol, data.train));
  }
  std::cout << "mle: active_count = " << sol.active_count()
            << ", cutoff = " << format_double(sol.cutoff) << '\n';
}

void cmd_train(const ExperimentConfig& config) {
  const Dataset data = load_dataset(config);
  const EdfFamily family = family_from_config(config);

  MleSolution sol;
  MleSummary summary;
  bool have_mle = false;
  try {
    sol = mle_fit(data.train, family, config.beta, config.kappa);
    if (config.beta > 0.0) {
      summary = summarize_mle(sol, data.train);
      have_mle = true;
      write_lhat(output_path(config, "lhat.txt"), summary);
    }
  } catch (const std::invalid_argument& err) {
    if (config.init == "mle_b") {
      throw NumericError(err.what());
    }
    std::cerr << "train: skipping MLE reference (" << err.what() << ")\n";
  }

  std::vector<std::uint64_t> ok_seeds;
  std::vector<TrainHistory> histories;
  for (std::uint64_t seed : config.seeds) {
    try {
      VaeModel model = make_initialized_model(config, data, config.beta, seed,
                                              have_mle ? &sol : nullptr);
      TrainHistory history =
          train(model, data, train_config_from(config, seed));
      write_history_csv(
          output_path(config, "history_seed" + std::to_string(seed) + ".csv"),
          history);
      save_checkpoint(
          output_path(config, "model_seed" + std::to_string(seed) + ".bin"),
          model);
      histories.push_back(std::move(history));
      ok_seeds.push_back(seed);
    } catch (const std::runtime_error& err) {
      std::cerr << "train: seed " << seed << " failed: " << err.what()
                << '\n';
    }
  }
  if (histories.empty()) {
    throw NumericError("train: every seed failed");
  }

  // Aggregate over seeds, normal-approximation 0.95 confidence intervals.
  std::ofstream agg(output_path(config, "aggregate.csv"));
  agg << "batch,split,mean_elbo,ci_low,ci_high\n";
  const std::size_t n_points = histories.front().records.size();
  PlotSeries train_series{"train", "#1f77b4", {}, {}, {}, {}};
  PlotSeries test_series{"test", "#d62728", {}, {}, {}, {}};
  for (std::size_t p = 0; p < n_points; ++p) {
    std::vector<double> train_vals;
    std::vector<double> test_vals;
    for (const TrainHistory& h : histories) {
      train_vals.push_back(h.records[p].train_elbo);
      test_vals.push_back(h.records[p].test_elbo);
    }
    const long batch = histories.front().records[p].batch;
    const AggregatePoint tr = aggregate(train_vals);
    const AggregatePoint te = aggregate(test_vals);
    agg << batch << ",train," << format_double(tr.mean) << ','
        << format_double(tr.ci_low) << ',' << format_double(tr.ci_high)
        << '\n';
    agg << batch << ",test," << format_double(te.mean) << ','
        << format_double(te.ci_low) << ',' << format_double(te.ci_high)
        << '\n';
    train_series.x.push_back(static_cast<double>(batch));
    train_series.y.push_back(tr.mean);
    train_series.band_low.push_back(tr.ci_low);
    train_series.band_high.push_back(tr.ci_high);
    test_series.x.push_back(static_cast<double>(batch));
    test_series.y.push_back(te.mean);
    test_series.band_low.push_back(te.ci_low);
    test_series.band_high.push_back(te.ci_high);
  }
  agg.close();

  if (config.emit_svg) {
    std::vector<ReferenceLine> refs;
    if (have_mle) {
      refs.push_back(ReferenceLine{"objective_hat", "#2ca02c", summary.lhat});
      refs.push_back(ReferenceLine{"objective_hat + E[R2]", "#9467bd",
                                   summary.lhat + summary.expected_r2});
    }
    write_line_plot_svg(output_path(config, "curves.svg"),
                        data.name + " (" + config.init + ")", "batch", "ELBO",
                        {train_series, test_series}, refs);
  }
  std::cout << "train: " << ok_seeds.size() << "/" << config.seeds.size()
            << " seeds completed\n";
}

void cmd_activity(const ExperimentConfig& config) {
  const Dataset data = load_dataset(config);
  const EdfFamily family = family_from_config(config);
  const std::vector<double> betas =
      config.betas.empty() ? std::vector<double>{config.beta} : config.betas;

  std::ofstream distances(output_path(config, "distance.csv"));
  distances << "beta,mean_distance,std_distance\n";

  for (double beta : betas) {
    MleSolution sol;
    try {
      sol = mle_fit(data.train, family, beta, config.kappa);
    } catch (const std::invalid_argument& err) {
      throw NumericError(err.what());
    }
    const ActivityReport analytical = analytical_activity(sol);
    const std::string tag = beta_tag(beta);
    write_activity_csv(
        output_path(config, "activity_beta" + tag + "_analytical.csv"),
        analytical);
    write_histogram_csv(
        output_path(config, "histogram_beta" + tag + "_analytical.csv"),
        analytical.histogram);

    std::vector<double> dist_values;
    for (std::uint64_t seed : config.seeds) {
      try {
        VaeModel model =
            make_initialized_model(config, data, beta, seed, &sol);
        train(model, data, train_config_from(config, seed));
        const ActivityReport empirical = empirical_activity(model, data.train);
        write_activity_csv(
            output_path(config, "activity_beta" + tag + "_seed" +
                                    std::to_string(seed) + "_empirical.csv"),
            empirical);
        dist_values.push_back(
            histogram_distance(analytical.histogram, empirical.histogram));
      } catch (const std::runtime_error& err) {
        std::cerr << "activity: beta " << beta << " seed " << seed
                  << " failed: " << err.what() << '\n';
      }
    }
    if (dist_values.empty()) {
      throw NumericError("activity: every seed failed for beta " +
                         format_double(beta));
    }
    double mean = 0.0;
    for (double v : dist_values) {
      mean += v;
    }
    mean /= static_cast<double>(dist_values.size());
    double var = 0.0;
    for (double v : dist_values) {
      var += (v - mean) * (v - mean);
    }
    var = dist_values.size() > 1
              ? var / static_cast<double>(dist_values.size() - 1)
              : 0.0;
    distances << format_double(beta) << ',' << format_double(mean) << ','
              << format_double(std::sqrt(var)) << '\n';
  }
}

void cmd_synth(const ExperimentConfig& config) {
  if (config.synth_d < 40) {
    throw ConfigError("config: synth_d must be >= 40");
  }
  const Dataset data =
      synthetic_bernoulli(config.synth_n, config.synth_d, config.synth_seed);
  save_csv(output_path(config, "synthetic_train.csv"), data.train);
  save_csv(output_path(config, "synthetic_test.csv"), data.test);
  std::cout << "synth: wrote " << data.train.rows() << " train / "
            << data.test.rows() << " test rows\n";
}

void cmd_init_export(const ExperimentConfig& config) {
  const Dataset data = load_dataset(config);
  const EdfFamily family = family_from_config(config);
  MleSolution sol;
  try {
    sol = mle_fit(data.train, family, config.beta, config.kappa);
  } catch (const std::invalid_argument& err) {
    throw NumericError(err.what());
  }
  save_mle_solution(output_path(config, "mle.bin"), sol);

  ExperimentConfig init_config = config;
  init_config.init = "mle_b";
  const VaeModel model = make_initialized_model(
      init_config, data, config.beta, config.seeds.front(), &sol);
  save_checkpoint(output_path(config, "mle_b_init.bin"), model);
  std::cout << "init-export: wrote mle_b_init.bin ("
            << model.parameter_count() << " parameters)\n";
}

}  // namespace edfvae
