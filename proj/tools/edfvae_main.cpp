#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edfvae/config.hpp"
#include "edfvae/experiments.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string output_dir;
  std::string dataset;
  double beta = -1.0;
  std::string seeds;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("config", opts.config_path, "experiment config file")
      ->required();
  cmd->add_option("--output-dir", opts.output_dir, "override output_dir");
  cmd->add_option("--dataset", opts.dataset, "override dataset");
  cmd->add_option("--beta", opts.beta, "override beta");
  cmd->add_option("--seeds", opts.seeds, "override seeds (comma list)");
}

edfvae::ExperimentConfig load_with_overrides(const CommonOptions& opts) {
  edfvae::ExperimentConfig config =
      edfvae::parse_config_file(opts.config_path);
  std::string patch;
  if (!opts.output_dir.empty()) patch += "output_dir = " + opts.output_dir + "\n";
  if (!opts.dataset.empty()) patch += "dataset = " + opts.dataset + "\n";
  if (opts.beta >= 0.0) patch += "beta = " + std::to_string(opts.beta) + "\n";
  if (!opts.seeds.empty()) patch += "seeds = " + opts.seeds + "\n";
  if (!patch.empty()) {
    config = edfvae::parse_config_text(edfvae::serialize_config(config) + patch);
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beta-VAE analysis toolkit for EDF observation models"};
  app.require_subcommand(1);

  CommonOptions opts;
  CLI::App* mle = app.add_subcommand(
      "mle", "closed-form MLE analysis of a dataset");
  add_common(mle, opts);
  CLI::App* train = app.add_subcommand("train", "seeded training runs");
  add_common(train, opts);
  CLI::App* activity = app.add_subcommand(
      "activity", "analytical vs empirical latent activity sweep");
  add_common(activity, opts);
  CLI::App* synth =
      app.add_subcommand("synth", "emit the synthetic dataset as CSV");
  add_common(synth, opts);
  CLI::App* init_export = app.add_subcommand(
      "init-export", "write an MLE-B-initialized model checkpoint");
  add_common(init_export, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    const edfvae::ExperimentConfig config = load_with_overrides(opts);
    if (mle->parsed()) {
      edfvae::cmd_mle(config);
    } else if (train->parsed()) {
      edfvae::cmd_train(config);
    } else if (activity->parsed()) {
      edfvae::cmd_activity(config);
    } else if (synth->parsed()) {
      edfvae::cmd_synth(config);
    } else if (init_export->parsed()) {
      edfvae::cmd_init_export(config);
    }
  } catch (const edfvae::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const edfvae::NumericError& err) {
    std::cerr << "numeric failure: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  }
  return 0;
}
