#pragma once

#include <string>

#include "edfvae/activity.hpp"
#include "edfvae/closed_form.hpp"
#include "edfvae/nn.hpp"

namespace edfvae {

/// Flat little-endian binary container for an MLE solution
/// (magic "EDFMLE01").
void save_mle_solution(const std::string& path, const MleSolution& sol);
MleSolution load_mle_solution(const std::string& path);

/// CSV view of an MLE solution: per-dimension rows with b_hat, eigenvalue
/// and predicted activity, then summary rows (sigma2, cutoff, beta, ...).
void write_mle_csv(const std::string& path, const MleSolution& sol);

/// Versioned flat binary model checkpoint (magic "EDFVAE01"): architecture
/// metadata followed by the raw parameter arrays in layer order.
void save_checkpoint(const std::string& path, const VaeModel& model);
VaeModel load_checkpoint(const std::string& path);

/// History CSV with header `batch,split,elbo,seconds`.
void write_history_csv(const std::string& path, const TrainHistory& history);

/// Activity report CSV: `dim,value,source` rows plus an
/// `active_count,<n>,<source>` summary row.
void write_activity_csv(const std::string& path, const ActivityReport& report);

/// Histogram CSV: `bin_low,bin_high,count` rows (last bin open-ended).
void write_histogram_csv(const std::string& path,
                         const std::array<int, kActivityBins>& histogram);

std::string format_double(double value);

}  // namespace edfvae
