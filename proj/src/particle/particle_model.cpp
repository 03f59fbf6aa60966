#include "wsde/particle/particle_model.hpp"

#include <cmath>
#include <numbers>

#include "wsde/ensemble/errors.hpp"

namespace wsde {

namespace {

double pos(std::span<const Complex> s) { return s[0].real(); }
double mom(std::span<const Complex> s) { return s[1].real(); }

}  // namespace

void ParticleParams::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("particle.gamma must be >= 0");
  if (!std::isfinite(k_p)) throw ConfigError("particle.k_p must be finite");
  if (!std::isfinite(x0)) throw ConfigError("particle.x0 must be finite");
}

ParticleModel::ParticleModel(ParticleParams params)
    : params_(params), sqrt_gamma_(std::sqrt(params.gamma)) {
  params_.validate();
}

void ParticleModel::state_coefficients(std::span<const Complex> state, double /*t*/,
                                       const FeedbackContext& ctx, StateCoefficients& out) const {
  const double u = ctx.control;
  out.drift[0] = state[1];
  out.drift[1] = -(state[0] - u);
  out.real_coupling[0] = 0.0;
  out.real_coupling[1] = 0.0;
  out.fict_coupling[0] = 0.0;
  out.fict_coupling[1] = sqrt_gamma_;
}

void ParticleModel::weight_coefficients(std::span<const Complex> state, double /*t*/,
                                        const FeedbackContext& ctx, WeightCoefficients& out) const {
  const double x = state[0].real();
  const double dx = x - ctx.averages[0];
  out.drift = -2.0 * params_.gamma * dx * dx;
  out.noise.resize(1);
  out.noise[0] = 2.0 * sqrt_gamma_ * x;
}

std::vector<Observable> ParticleModel::context_observables() const {
  return {Observable::mean("x_mean", pos), Observable::mean("p_mean", mom)};
}

FeedbackContext ParticleModel::make_context(std::span<const double> averages) const {
  FeedbackContext ctx;
  ctx.averages.assign(averages.begin(), averages.end());
  ctx.control = params_.k_p * averages[1];
  return ctx;
}

double ParticleModel::energy(std::span<const Complex> s) {
  const double x = pos(s);
  const double p = mom(s);
  return 0.5 * (x * x + p * p);
}

std::vector<Observable> ParticleModel::observables() const {
  return {Observable::mean("energy", energy), Observable::mean("x_mean", pos),
          Observable::mean("p_mean", mom), Observable::variance("var_x", pos),
          Observable::variance("var_p", mom)};
}

StateVector ParticleModel::sample_initial(NormalStream& rng) const {
  double z[2];
  rng.fill(z, std::numbers::sqrt2 / 2.0);
  return {Complex(params_.x0 + z[0], 0.0), Complex(z[1], 0.0)};
}

}  // namespace wsde
