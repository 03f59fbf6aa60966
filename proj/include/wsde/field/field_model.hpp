#pragma once

#include <cmath>
#include <complex>
#include <memory>

#include "wsde/core/model.hpp"

namespace wsde {

/// Noninteracting bosonic field in a harmonic trap, centre-of-mass position
/// measured continuously, centre-of-mass momentum fed back (trap units).
struct FieldParams {
  double gamma = 0.02;            ///< measurement strength
  double k_p = -1.35;             ///< feedback gain, u = k_p Re<P>
  std::size_t modes = 32;         ///< grid points, a power of two
  double box_length = 16.0;       ///< periodic box [-L/2, L/2)
  double particles = 1.0;         ///< N of the initial coherent state
  double x0 = std::sqrt(5.0);     ///< initial displacement
  /// A path counts as diverged once ||phi|| ||xi|| exceeds this multiple of N.
  double amplitude_limit = 20.0;

  void validate() const;
  double dx() const { return box_length / static_cast<double>(modes); }
  double x(std::size_t i) const { return -0.5 * box_length + static_cast<double>(i) * dx(); }
};

/// Positive-P weighted SDEs of the measured and feedback-controlled field.
/// The state interleaves the doubled fields: state[2i] = phi(x_i),
/// state[2i + 1] = xi(x_i).  With H = -d^2/2 + x^2/2 - u x,
///
///   dphi = [-i H phi - 2g x (X - <X>) phi] dt + sqrt(g) x phi o ( i dV1 + i dV2 + dW)
///   dxi  = [+i H xi  - 2g x (X - <X>) xi ] dt + sqrt(g) x xi  o (-i dV1 + i dV2 + dW)
///   d log w = Re[-2g (X2 + (X - <X>)^2)] dt + 2 sqrt(g) Re X o dW
///
/// where X = sum x phi xi dx, X2 = sum x^2 phi xi dx, <X> is the real part of
/// the weighted ensemble mean, and u = k_p Re<P> with P = sum xi (-i d/dx) phi dx.
/// The kinetic term is applied spectrally.  Context averages are
/// (Re<X>, Re<P>).
class FieldModel final : public CoefficientModel {
 public:
  explicit FieldModel(FieldParams params);
  ~FieldModel() override;

  FieldModel(const FieldModel&) = delete;
  FieldModel& operator=(const FieldModel&) = delete;

  const FieldParams& params() const { return params_; }

  std::string name() const override { return "field"; }
  std::size_t dimension() const override { return 2 * params_.modes; }
  std::size_t real_noise_count() const override { return 1; }
  std::size_t fict_noise_count() const override { return 2; }

  void state_coefficients(std::span<const Complex> state, double t, const FeedbackContext& ctx,
                          StateCoefficients& out) const override;
  void weight_coefficients(std::span<const Complex> state, double t, const FeedbackContext& ctx,
                           WeightCoefficients& out) const override;

  std::vector<Observable> context_observables() const override;
  FeedbackContext make_context(std::span<const double> averages) const override;

  /// energy, x_mean, p_mean, var_x, var_p, norm, im_X
  std::vector<Observable> observables() const override;

  /// Coherent state phi = sqrt(N) psi0(x - x0), xi = conj(phi); draws nothing.
  StateVector sample_initial(NormalStream& rng) const override;

  bool diverged(std::span<const Complex> state) const override;

  // Per-path functionals, all Riemann sums on the grid.
  Complex number(std::span<const Complex> state) const;          ///< sum phi xi dx
  Complex position(std::span<const Complex> state) const;        ///< X
  Complex position_sq(std::span<const Complex> state) const;     ///< X2
  Complex momentum(std::span<const Complex> state) const;        ///< P
  Complex momentum_sq(std::span<const Complex> state) const;     ///< sum xi (-d^2) phi dx
  /// sum xi (x^2/2 - d^2/2) phi dx, excluding the control term.
  Complex energy(std::span<const Complex> state) const;

 private:
  // Applies i^power k^power in Fourier space to one field (stride 2 in state).
  void spectral_derivative(std::span<const Complex> state, std::size_t offset, int order,
                           std::vector<Complex>& out) const;

  struct Transform;

  FieldParams params_;
  double sqrt_gamma_;
  std::vector<double> x_;
  std::vector<double> k_;
  std::unique_ptr<Transform> fft_;
};

}  // namespace wsde
