#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace edfvae {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment, read from a `key = value` file.  Unset keys keep the
/// defaults below (batch size and learning rate follow the training
/// protocol the toolkit reproduces).
struct ExperimentConfig {
  std::string dataset = "synthetic";  // "synthetic" or a csv/idx path
  std::string dataset_test;           // optional explicit test file
  std::string family = "bernoulli";
  int trials_n = 1;
  double rho = 1.0;
  double phi = 0.0;  // Gaussian observation variance; 0 = use sigma2 from MLE
  std::string architecture = "canonical";
  long kappa = 2;
  double beta = 1.0;
  std::vector<double> betas;  // activity sweep; falls back to {beta}
  std::vector<std::uint64_t> seeds = {1};
  long batch = 100;
  long total_batches = 25000;
  double lr = 1e-4;
  long eval_every = 100;
  int eval_mc = 16;
  int train_mc = 1;
  std::string init = "bench";  // "bench" or "mle_b"
  bool mle_b_identity_trunk = true;
  double hidden_scale = 1.0;
  std::string output_dir = "out";
  bool csv_has_header = false;
  bool allow_raw = false;
  double split_fraction = 0.67;
  long limit_rows = 0;  // 0 = use every row
  long synth_n = 10000;
  long synth_d = 200;
  std::uint64_t synth_seed = 4242;
  bool emit_svg = true;

  void validate() const;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);
void write_config_file(const std::string& path,
                       const ExperimentConfig& config);

/// Output directory with the EDFVAE_OUTPUT_ROOT override applied.
std::string resolve_output_dir(const ExperimentConfig& config);

}  // namespace edfvae
