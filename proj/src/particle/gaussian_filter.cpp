#include "wsde/particle/gaussian_filter.hpp"

#include <array>
#include <cmath>

#include "wsde/ensemble/errors.hpp"

namespace wsde {

namespace {

using Cov = std::array<double, 3>;  // vxx, vxp, vpp

Cov riccati_rhs(const Cov& v, double g) {
  return {2.0 * v[1] - 4.0 * g * v[0] * v[0],
          v[2] - v[0] - 4.0 * g * v[0] * v[1],
          -2.0 * v[1] + g - 4.0 * g * v[1] * v[1]};
}

Cov rk4(const Cov& v, double g, double h) {
  auto axpy = [](const Cov& a, const Cov& b, double s) {
    return Cov{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
  };
  const Cov k1 = riccati_rhs(v, g);
  const Cov k2 = riccati_rhs(axpy(v, k1, h / 2), g);
  const Cov k3 = riccati_rhs(axpy(v, k2, h / 2), g);
  const Cov k4 = riccati_rhs(axpy(v, k3, h), g);
  Cov out;
  for (int i = 0; i < 3; ++i) out[i] = v[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

}  // namespace

std::vector<GaussianMoments> gaussian_filter_oracle(const ParticleParams& params,
                                                    const NoiseRecord& record,
                                                    const GaussianFilterOptions& options) {
  if (record.n_real != 1) throw ConfigError("gaussian filter oracle needs a record with n_real = 1");
  params.validate();
  const std::size_t steps = options.steps == 0 ? record.steps() : options.steps;
  if (steps > record.steps()) throw ConfigError("noise record is shorter than the requested run");
  const bool replay_control = !options.applied_control.empty();
  if (replay_control && options.applied_control.size() < steps)
    throw ConfigError("applied control sequence is shorter than the requested run");
  const std::size_t every = options.sample_every == 0 ? 1 : options.sample_every;

  const double g = params.gamma;
  const double gain = 2.0 * std::sqrt(g);
  const double dt = record.dt;
  const double h = 0.5 * dt;
  const double det = 1.0 + h * h;

  double x = params.x0;
  double p = 0.0;
  Cov v{0.5, 0.0, 0.5};

  std::vector<GaussianMoments> out;
  auto push = [&](std::size_t step) {
    out.push_back({static_cast<double>(step) * dt, x, p, v[0], v[1], v[2]});
  };
  push(0);

  for (std::size_t s = 0; s < steps; ++s) {
    const double dw = record.increments[s];
    const double u = replay_control ? options.applied_control[s]
                     : options.feedback ? params.k_p * p
                                        : 0.0;
    const Cov mid = rk4(v, g, h);

    // (I - F h) m' = (I + F h) m + b u dt + K dW,  F = [[0, 1], [-1, 0]]
    const double rx = x + h * p + gain * mid[0] * dw;
    const double rp = p - h * x + u * dt + gain * mid[1] * dw;
    x = (rx + h * rp) / det;
    p = (rp - h * rx) / det;

    v = rk4(v, g, dt);
    if ((s + 1) % every == 0 || s + 1 == steps) push(s + 1);
  }
  return out;
}

}  // namespace wsde
