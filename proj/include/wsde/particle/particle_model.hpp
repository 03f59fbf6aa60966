#pragma once

#include <cmath>

#include "wsde/core/model.hpp"

namespace wsde {

/// Single trapped particle under continuous position measurement with
/// momentum feedback, in trap units (hbar = m = omega = 1).
struct ParticleParams {
  double gamma = 1.0;             ///< measurement strength
  double k_p = -1.35;             ///< feedback gain, u = k_p * <p>
  double x0 = std::sqrt(5.0);     ///< initial displacement; sqrt(5) gives E = 3

  void validate() const;
};

/// Wigner-representation weighted SDEs of the feedback-cooled particle.
/// State (x, p), one real noise (measurement), one fictitious noise:
///   dx = p dt
///   dp = -(x - u) dt + sqrt(gamma) o dV
///   d log w = -2 gamma (x - <x>)^2 dt + 2 sqrt(gamma) x o dW
/// Context averages are (<x>, <p>); the control is u = k_p <p>.
class ParticleModel final : public CoefficientModel {
 public:
  explicit ParticleModel(ParticleParams params);

  const ParticleParams& params() const { return params_; }

  std::string name() const override { return "particle"; }
  std::size_t dimension() const override { return 2; }
  std::size_t real_noise_count() const override { return 1; }
  std::size_t fict_noise_count() const override { return 1; }

  void state_coefficients(std::span<const Complex> state, double t, const FeedbackContext& ctx,
                          StateCoefficients& out) const override;
  void weight_coefficients(std::span<const Complex> state, double t, const FeedbackContext& ctx,
                           WeightCoefficients& out) const override;

  std::vector<Observable> context_observables() const override;
  FeedbackContext make_context(std::span<const double> averages) const override;

  /// energy, x_mean, p_mean, var_x, var_p
  std::vector<Observable> observables() const override;

  /// Wigner function of the displaced ground state: (x, p) ~ N((x0, 0), diag(1/2, 1/2)).
  StateVector sample_initial(NormalStream& rng) const override;

  /// Symmetric-ordered energy (x^2 + p^2) / 2 of one path; excludes -u x.
  static double energy(std::span<const Complex> state);

 private:
  ParticleParams params_;
  double sqrt_gamma_;
};

}  // namespace wsde
