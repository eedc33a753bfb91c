#pragma once

#include <array>
#include <string>

#include "edfvae/closed_form.hpp"
#include "edfvae/nn.hpp"
#include "edfvae/types.hpp"

namespace edfvae {

inline constexpr int kActivityBins = 10;
inline constexpr double kActiveThreshold = 0.01;

enum class ActivitySource { kAnalytical, kEmpirical };

std::string to_string(ActivitySource source);

/// Per-dimension latent activity values with their 10-bin histogram
/// ([0, 0.1), [0.1, 0.2), ..., [0.9, inf)); a dimension counts as active
/// above 0.01.
struct ActivityReport {
  Vector values;
  std::array<int, kActivityBins> histogram{};
  int active_count = 0;
  ActivitySource source = ActivitySource::kEmpirical;
};

std::array<int, kActivityBins> histogram_from_values(const Vector& values);

ActivityReport make_report(const Vector& values, ActivitySource source);

/// Activity of each latent dimension: the variance (divisor N) over the
/// data of the encoder posterior mean.
ActivityReport empirical_activity(const VaeModel& model, const Matrix& x);

/// Predicted activity from an MLE solution.
ActivityReport analytical_activity(const MleSolution& sol);

/// 1 - overlap/kappa on two histograms of equal mass kappa.
double histogram_distance(const std::array<int, kActivityBins>& h1,
                          const std::array<int, kActivityBins>& h2);

}  // namespace edfvae
