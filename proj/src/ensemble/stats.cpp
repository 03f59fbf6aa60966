#include "wsde/ensemble/stats.hpp"

#include <cmath>

#include "wsde/ensemble/errors.hpp"

namespace wsde {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

WeightedValue weighted_statistic(std::span<const double> weights,
                                 const std::vector<std::vector<double>>& values,
                                 const std::function<double(std::span<const double>)>& combine) {
  const std::size_t m_count = weights.size();
  const std::size_t k_count = values.size();
  const double sw = pairwise_sum(weights);
  if (!(sw > 0.0)) throw EnsembleCollapsed();

  std::vector<double> swf(k_count);
  std::vector<double> tmp(m_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t m = 0; m < m_count; ++m) tmp[m] = weights[m] * values[k][m];
    swf[k] = pairwise_sum(tmp);
  }

  std::vector<double> means(k_count);
  for (std::size_t k = 0; k < k_count; ++k) means[k] = swf[k] / sw;
  WeightedValue out{combine(means), 0.0};
  if (m_count < 2) return out;

  // Delete-one replicates.  A replicate that removes all weight is undefined
  // and skipped.
  std::vector<double> reps;
  reps.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double rest = sw - weights[m];
    if (!(rest > 0.0)) continue;
    for (std::size_t k = 0; k < k_count; ++k) {
      means[k] = (swf[k] - weights[m] * values[k][m]) / rest;
    }
    reps.push_back(combine(means));
  }
  if (reps.size() < 2) return out;
  const double n = static_cast<double>(reps.size());
  const double rep_mean = pairwise_sum(reps) / n;
  for (double& r : reps) r = (r - rep_mean) * (r - rep_mean);
  out.std_err = std::sqrt((n - 1.0) / n * pairwise_sum(reps));
  return out;
}

double effective_sample_size(std::span<const double> weights) {
  const double s1 = pairwise_sum(weights);
  std::vector<double> sq(weights.begin(), weights.end());
  for (double& w : sq) w *= w;
  const double s2 = pairwise_sum(sq);
  return s2 > 0.0 ? s1 * s1 / s2 : 0.0;
}

WeightedValue mean_and_stderr(std::span<const double> samples) {
  const double n = static_cast<double>(samples.size());
  if (samples.empty()) return {};
  const double mean = pairwise_sum(samples) / n;
  if (samples.size() < 2) return {mean, 0.0};
  std::vector<double> dev(samples.begin(), samples.end());
  for (double& d : dev) d = (d - mean) * (d - mean);
  return {mean, std::sqrt(pairwise_sum(dev) / (n - 1.0) / n)};
}

}  // namespace wsde
