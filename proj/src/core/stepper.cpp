#include "wsde/core/stepper.hpp"

#include <cmath>
#include <stdexcept>

namespace wsde {

NoiseIncrements generate_increments(NormalStream& rng_real, NormalStream& rng_fict,
                                    const NoiseSpec& spec) {
  NoiseIncrements inc;
  inc.real.resize(spec.n_real);
  inc.fict.resize(spec.n_fict);
  const double scale = std::sqrt(spec.dt);
  rng_real.fill(inc.real, scale);
  rng_fict.fill(inc.fict, scale);
  return inc;
}

namespace {

bool all_finite(std::span<const Complex> v) {
  for (const Complex& z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

}  // namespace

bool step_trajectory(const CoefficientModel& model, std::span<Complex> state, double& log_weight,
                     double t, double dt, std::span<const double> real_inc,
                     std::span<const double> fict_inc, const FeedbackContext& ctx,
                     StepWorkspace& ws, const StepperOptions& options) {
  const std::size_t n = model.dimension();
  const std::size_t n_real = model.real_noise_count();
  const std::size_t n_fict = model.fict_noise_count();
  if (state.size() != n) throw std::invalid_argument("step_trajectory: state dimension mismatch");
  if (real_inc.size() != n_real || fict_inc.size() != n_fict) {
    throw std::invalid_argument("step_trajectory: increment count mismatch");
  }

  ws.coeffs.resize(n, n_real, n_fict);
  ws.midpoint.assign(state.begin(), state.end());
  const double t_mid = t + 0.5 * dt;

  for (int iter = 0; iter < options.midpoint_iterations; ++iter) {
    model.state_coefficients(ws.midpoint, t_mid, ctx, ws.coeffs);
    for (std::size_t i = 0; i < n; ++i) {
      Complex dx = ws.coeffs.drift[i] * dt;
      for (std::size_t j = 0; j < n_real; ++j) dx += ws.coeffs.real_coupling[i + n * j] * real_inc[j];
      for (std::size_t k = 0; k < n_fict; ++k) dx += ws.coeffs.fict_coupling[i + n * k] * fict_inc[k];
      ws.midpoint[i] = state[i] + 0.5 * dx;
    }
  }

  model.weight_coefficients(ws.midpoint, t_mid, ctx, ws.weights);
  double dlog = ws.weights.drift * dt;
  for (std::size_t j = 0; j < n_real; ++j) dlog += ws.weights.noise[j] * real_inc[j];

  for (std::size_t i = 0; i < n; ++i) state[i] = 2.0 * ws.midpoint[i] - state[i];
  log_weight += dlog;

  if (!std::isfinite(log_weight) || !all_finite(state)) return false;
  return !model.diverged(state);
}

StepResult step_trajectory(const CoefficientModel& model, const StateVector& state,
                           double log_weight, double t, double dt, const NoiseIncrements& inc,
                           const FeedbackContext& ctx, const StepperOptions& options) {
  StepResult result{state, log_weight, true};
  StepWorkspace ws;
  result.finite = step_trajectory(model, result.state, result.log_weight, t, dt, inc.real,
                                  inc.fict, ctx, ws, options);
  return result;
}

}  // namespace wsde
