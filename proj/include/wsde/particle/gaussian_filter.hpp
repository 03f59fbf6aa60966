#pragma once

#include <cstddef>
#include <vector>

#include "wsde/ensemble/noise_record.hpp"
#include "wsde/particle/particle_model.hpp"

namespace wsde {

/// Conditional mean and symmetric covariance of a Gaussian state.
struct GaussianMoments {
  double t = 0.0;
  double x = 0.0;
  double p = 0.0;
  double vxx = 0.5;
  double vxp = 0.0;
  double vpp = 0.5;
};

struct GaussianFilterOptions {
  std::size_t sample_every = 1;
  /// Steps to integrate; 0 means the whole record.
  std::size_t steps = 0;
  bool feedback = true;
  /// When non-empty, the control applied in step s is applied_control[s]
  /// instead of k_p times the oracle's own mean momentum.
  std::vector<double> applied_control;
};

/// Exact conditional-Gaussian dynamics of the measured, feedback-controlled
/// particle, driven by a recorded innovation path dW:
///
///   d<x> = <p> dt + 2 sqrt(g) Vxx dW
///   d<p> = -(<x> - u) dt + 2 sqrt(g) Vxp dW,      u = k_p <p>
///   dVxx/dt = 2 Vxp - 4 g Vxx^2
///   dVxp/dt = Vpp - Vxx - 4 g Vxx Vxp
///   dVpp/dt = -2 Vxp + g - 4 g Vxp^2
///
/// The covariance follows the noise-free Riccati flow (RK4); the means take a
/// Crank-Nicolson step with the gain evaluated at the covariance midpoint and
/// u frozen at the start of each step.  Independent of the weighted-SDE code
/// path; used as ground truth for linear feedback.
std::vector<GaussianMoments> gaussian_filter_oracle(const ParticleParams& params,
                                                    const NoiseRecord& record,
                                                    const GaussianFilterOptions& options = {});

}  // namespace wsde
