#pragma once

#include <span>
#include <utility>

#include "wsde/core/model.hpp"
#include "wsde/core/rng.hpp"

namespace wsde {

/// Draws one step of increments: `real` from rng_real, `fict` from rng_fict.
/// Each call consumes a fixed number of words from each stream.
NoiseIncrements generate_increments(NormalStream& rng_real, NormalStream& rng_fict,
                                    const NoiseSpec& spec);

struct StepperOptions {
  int midpoint_iterations = 4;
};

/// Scratch buffers reused across steps; one per worker thread.
struct StepWorkspace {
  StateCoefficients coeffs;
  WeightCoefficients weights;
  StateVector midpoint;
};

/// Advances `state` and `log_weight` in place by one step of the
/// semi-implicit midpoint scheme:
///   x_mid = x + 1/2 [A(x_mid) dt + B(x_mid) dW + C(x_mid) dV]   (fixed point)
///   x'    = 2 x_mid - x
///   log w' = log w + alpha(x_mid) dt + beta(x_mid) . dW
/// Coefficients are evaluated at t + dt/2 with `ctx` held fixed.
/// Returns false if the result is non-finite or the model's watch fires.
bool step_trajectory(const CoefficientModel& model, std::span<Complex> state, double& log_weight,
                     double t, double dt, std::span<const double> real_inc,
                     std::span<const double> fict_inc, const FeedbackContext& ctx,
                     StepWorkspace& ws, const StepperOptions& options = {});

struct StepResult {
  StateVector state;
  double log_weight = 0.0;
  bool finite = true;
};

/// Value-semantics convenience wrapper around the in-place stepper.
StepResult step_trajectory(const CoefficientModel& model, const StateVector& state,
                           double log_weight, double t, double dt, const NoiseIncrements& inc,
                           const FeedbackContext& ctx, const StepperOptions& options = {});

}  // namespace wsde
