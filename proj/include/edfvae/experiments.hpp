#pragma once

#include <string>

#include "edfvae/closed_form.hpp"
#include "edfvae/config.hpp"
#include "edfvae/data.hpp"
#include "edfvae/nn.hpp"

namespace edfvae {

/// Dataset named by the config: the built-in synthetic generator or a
/// csv/idx file (with optional explicit test file, row limit and split).
Dataset load_dataset(const ExperimentConfig& config);

EdfFamily family_from_config(const ExperimentConfig& config);

VaeModel build_model_from_config(const ExperimentConfig& config, Index d,
                                 double beta);

/// Build and initialize one per-seed model.  For mle_b the observation
/// dispersion of a Gaussian model is set to sigma2 from the solution unless
/// the config pins phi.
VaeModel make_initialized_model(const ExperimentConfig& config,
                                const Dataset& data, double beta,
                                std::uint64_t seed, const MleSolution* sol);

/// `mle`: fit the closed-form solution and write mle.csv, mle.bin and
/// lhat.txt (objective value and expected remainder) to the output dir.
void cmd_mle(const ExperimentConfig& config);

/// `train`: per-seed training runs; writes history_seed<k>.csv, an
/// aggregate CSV with 0.95 confidence intervals, lhat.txt and optionally an
/// SVG of the curves.  A diverging seed is reported and skipped.
void cmd_train(const ExperimentConfig& config);

/// `activity`: for each beta, the analytical activity report, per-seed
/// empirical reports from trained models, histograms and the histogram
/// distances (distance.csv holds mean +- std per beta).
void cmd_activity(const ExperimentConfig& config);

/// `synth`: write the synthetic dataset as train/test CSV files.
void cmd_synth(const ExperimentConfig& config);

/// `init-export`: write an MLE-B-initialized model checkpoint and mle.bin.
void cmd_init_export(const ExperimentConfig& config);

}  // namespace edfvae
