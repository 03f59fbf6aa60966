#pragma once

#include <functional>
#include <span>
#include <vector>

namespace wsde {

struct WeightedValue {
  double value = 0.0;
  double std_err = 0.0;
};

/// Pairwise (tree) summation in index order.  The association order depends
/// only on the length, so results are bit-stable across runs.
double pairwise_sum(std::span<const double> v);

/// Evaluates combine(m_1..m_K) where m_k = sum_m w_m f_k(m) / sum_m w_m, with a
/// delete-one jackknife standard error.  `weights` are non-negative linear
/// weights, already scaled so the largest is 1.  Throws EnsembleCollapsed if
/// every weight is zero.
WeightedValue weighted_statistic(std::span<const double> weights,
                                 const std::vector<std::vector<double>>& values,
                                 const std::function<double(std::span<const double>)>& combine);

/// (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> weights);

/// Cross-sample mean and standard error of the mean (n-1 denominator).
WeightedValue mean_and_stderr(std::span<const double> samples);

}  // namespace wsde
