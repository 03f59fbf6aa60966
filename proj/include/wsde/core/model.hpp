#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsde/core/rng.hpp"

namespace wsde {

using Complex = std::complex<double>;

/// Phase-space variables of one trajectory.  Real-valued models keep the
/// imaginary parts at exactly zero.
using StateVector = std::vector<Complex>;

/// Index ranges of the two noise families and the common time step.
struct NoiseSpec {
  std::size_t n_real = 0;
  std::size_t n_fict = 0;
  double dt = 0.0;

  NoiseSpec(std::size_t real, std::size_t fict, double step);
};

/// Gaussian increments for one step: `real` is shared by every trajectory of an
/// ensemble, `fict` is private to one trajectory.  Both have variance dt.
struct NoiseIncrements {
  std::vector<double> real;
  std::vector<double> fict;
};

/// Weighted ensemble averages frozen at the start of a step, in the order of
/// CoefficientModel::context_observables(), plus the control value they imply.
struct FeedbackContext {
  std::vector<double> averages;
  double control = 0.0;
};

/// Drift A (n), real-noise coupling B (n x n_real) and fictitious coupling
/// C (n x n_fict).  Matrices are column-major: B[i + n * j].
struct StateCoefficients {
  std::vector<Complex> drift;
  std::vector<Complex> real_coupling;
  std::vector<Complex> fict_coupling;

  void resize(std::size_t n, std::size_t n_real, std::size_t n_fict);
};

/// Weight drift alpha and weight noise beta_j of d(omega)/omega.
struct WeightCoefficients {
  double drift = 0.0;
  std::vector<double> noise;
};

using PathFunction = std::function<double(std::span<const Complex>)>;

/// A recorded quantity built from weighted means of per-path functions.
/// `combine` maps the weighted means of `inputs` to the reported value; its
/// standard error is obtained by delete-one jackknife.
struct Observable {
  std::string name;
  std::vector<PathFunction> inputs;
  std::function<double(std::span<const double>)> combine;

  static Observable mean(std::string name, PathFunction f);
  /// Weighted variance of f.
  static Observable variance(std::string name, PathFunction f);
};

/// Coefficient functions of the weighted SDE system
///   dx_i = A_i dt + B_ij o dW_j + C_ik o dV_k,
///   d(omega)/omega = alpha dt + beta_j o dW_j   (Stratonovich).
/// Implementations must be pure: equal inputs give bit-identical outputs.
class CoefficientModel {
 public:
  virtual ~CoefficientModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::size_t real_noise_count() const = 0;
  virtual std::size_t fict_noise_count() const = 0;

  NoiseSpec noise_spec(double dt) const { return {real_noise_count(), fict_noise_count(), dt}; }

  virtual void state_coefficients(std::span<const Complex> state, double t,
                                  const FeedbackContext& ctx, StateCoefficients& out) const = 0;

  virtual void weight_coefficients(std::span<const Complex> state, double t,
                                   const FeedbackContext& ctx, WeightCoefficients& out) const = 0;

  /// Per-path functions whose weighted means the context needs.
  virtual std::vector<Observable> context_observables() const = 0;
  virtual FeedbackContext make_context(std::span<const double> averages) const = 0;

  virtual std::vector<Observable> observables() const = 0;

  virtual StateVector sample_initial(NormalStream& rng) const = 0;

  /// Model-specific instability watch, in addition to the finiteness check.
  virtual bool diverged(std::span<const Complex> /*state*/) const { return false; }
};

}  // namespace wsde
