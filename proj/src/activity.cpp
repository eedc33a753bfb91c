#include "edfvae/activity.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace edfvae {

std::string to_string(ActivitySource source) {
  return source == ActivitySource::kAnalytical ? "analytical" : "empirical";
}

std::array<int, kActivityBins> histogram_from_values(const Vector& values) {
  std::array<int, kActivityBins> bins{};
  for (Index j = 0; j < values.size(); ++j) {
    int bin = static_cast<int>(values[j] * 10.0);
    bin = std::clamp(bin, 0, kActivityBins - 1);
    bins[static_cast<std::size_t>(bin)] += 1;
  }
  return bins;
}

ActivityReport make_report(const Vector& values, ActivitySource source) {
  ActivityReport report;
  report.values = values;
  report.histogram = histogram_from_values(values);
  report.source = source;
  report.active_count = 0;
  for (Index j = 0; j < values.size(); ++j) {
    if (values[j] > kActiveThreshold) {
      report.active_count += 1;
    }
  }
  return report;
}

ActivityReport empirical_activity(const VaeModel& model, const Matrix& x) {
  if (x.rows() < 1) {
    throw std::invalid_argument("empirical_activity: empty data");
  }
  const Matrix mu = model.encode_mu(x);
  const Vector mean = mu.colwise().mean().transpose();
  const Matrix centered = mu.rowwise() - mean.transpose();
  const Vector variance =
      centered.array().square().colwise().sum().transpose() /
      static_cast<double>(x.rows());
  return make_report(variance, ActivitySource::kEmpirical);
}

ActivityReport analytical_activity(const MleSolution& sol) {
  return make_report(activity_predict(sol), ActivitySource::kAnalytical);
}

double histogram_distance(const std::array<int, kActivityBins>& h1,
                          const std::array<int, kActivityBins>& h2) {
  const int mass1 = std::accumulate(h1.begin(), h1.end(), 0);
  const int mass2 = std::accumulate(h2.begin(), h2.end(), 0);
  if (mass1 != mass2 || mass1 < 1) {
    throw std::invalid_argument("histogram_distance: histogram mass mismatch");
  }
  int overlap = 0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    if (h1[i] < 0 || h2[i] < 0) {
      throw std::invalid_argument("histogram_distance: negative bin count");
    }
    overlap += std::min(h1[i], h2[i]);
  }
  return 1.0 - static_cast<double>(overlap) / static_cast<double>(mass1);
}

}  // namespace edfvae
