#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "wsde/ensemble/experiment.hpp"
#include "wsde/ensemble/noise_record.hpp"
#include "wsde/particle/particle_model.hpp"

namespace wsde {

/// Periodic box x in [-l_x, l_x), p in [-l_p, l_p) with n_x * n_p nodes.
struct GridSpec {
  std::size_t n_x = 256;
  std::size_t n_p = 256;
  double l_x = 8.0;
  double l_p = 8.0;

  void validate() const;
  double dx() const { return 2.0 * l_x / static_cast<double>(n_x); }
  double dp() const { return 2.0 * l_p / static_cast<double>(n_p); }
  double x(std::size_t i) const { return -l_x + static_cast<double>(i) * dx(); }
  double p(std::size_t j) const { return -l_p + static_cast<double>(j) * dp(); }
};

struct GridMoments {
  double x = 0.0;
  double p = 0.0;
  double vxx = 0.0;
  double vpp = 0.0;
  double energy = 0.0;  ///< (<x^2> + <p^2>) / 2
};

/// Discretized Wigner function W(x, p), stored p-major: value(ix, ip) at
/// index ip * n_x + ix.  Construction normalizes to sum W dx dp = 1.
class PhaseSpaceGrid {
 public:
  PhaseSpaceGrid(GridSpec spec, std::vector<double> values);

  /// Normalized Gaussian with the given mean and diagonal variances.  Throws
  /// ConfigError("grid too small") if the boundary density exceeds 1e-12 of
  /// the peak.
  static PhaseSpaceGrid gaussian(const GridSpec& spec, double x0, double p0, double var_x,
                                 double var_p);

  const GridSpec& spec() const { return spec_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double at(std::size_t ix, std::size_t ip) const { return values_[ip * spec_.n_x + ix]; }

  double norm() const;
  /// Rescales to unit norm; returns the norm before rescaling.
  double renormalize();
  GridMoments moments() const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

struct GridSolverOptions {
  bool advection = true;
  bool diffusion = true;
  bool conditioning = true;
};

/// Spectral split-step integrator for the conditional Wigner equation of the
/// measured, feedback-controlled particle:
///
///   dW = [ (x - u) d_p W - p d_x W + (g/2) d_p^2 W
///          - 2g ((x - <x>)^2 - <(x - <x>)^2>) W ] dt
///        + 2 sqrt(g) (x - <x>) W o dW
///
/// Each step is Strang-split: half a step of advection plus diffusion, the
/// full multiplicative conditioning update with moments taken at the half
/// step, then another half step of advection plus diffusion.  Advection uses
/// exact Fourier shears (leapfrog in x, p, x); diffusion is exact in p-Fourier
/// space.
class WignerGridSolver {
 public:
  WignerGridSolver(ParticleParams params, PhaseSpaceGrid initial, GridSolverOptions options = {});
  ~WignerGridSolver();

  WignerGridSolver(const WignerGridSolver&) = delete;
  WignerGridSolver& operator=(const WignerGridSolver&) = delete;

  const PhaseSpaceGrid& grid() const { return grid_; }
  const ParticleParams& params() const { return params_; }

  /// Advances by dt with real increment dw and control u.  Throws
  /// std::runtime_error("step too large") if the conditioning update changes
  /// the norm by more than 10% before renormalization.
  void step(double dt, double dw, double u);

  /// Relative norm change of the last conditioning update, before renormalizing.
  double last_norm_drift() const { return last_norm_drift_; }

 private:
  void shear_x(double tau);
  void shear_p_and_diffuse(double tau, double u);
  void advect_diffuse(double tau, double u);
  void condition(double dt, double dw);

  struct Plans;

  ParticleParams params_;
  PhaseSpaceGrid grid_;
  GridSolverOptions options_;
  std::unique_ptr<Plans> plans_;
  double last_norm_drift_ = 0.0;
};

/// Drives the grid solver with a recorded real-noise path and u = k_p <p>,
/// recording the particle CSV observables (energy, x_mean, p_mean, var_x,
/// var_p) with zero standard error.
ExperimentRecord run_grid_experiment(const ParticleParams& params, const GridSpec& spec,
                                     const NoiseRecord& record, const RunSchedule& schedule);

}  // namespace wsde
