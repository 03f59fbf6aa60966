#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "wsde/core/model.hpp"
#include "wsde/core/rng.hpp"
#include "wsde/core/stepper.hpp"
#include "wsde/ensemble/stats.hpp"
#include "wsde/ensemble/worker_pool.hpp"

namespace wsde {

enum class DivergencePolicy {
  Abort,       ///< throw DivergenceError
  ZeroWeight,  ///< drop the path's weight to zero; breeding then replaces it
};

struct EnsembleConfig {
  std::size_t trajectories = 1000;
  double dt = 1e-3;
  double breed_tolerance = 1e-4;
  bool breeding = true;
  DivergencePolicy on_divergence = DivergencePolicy::Abort;
  std::uint64_t seed_real = 0;
  std::uint64_t seed_fict = 0;
  std::uint64_t realization = 0;
  std::size_t threads = 1;
  int midpoint_iterations = 4;
  /// Hash the real increments seen by every trajectory and verify they agree.
  bool check_shared_noise = false;

  void validate() const;
};

struct BreedReport {
  std::size_t events = 0;
  /// Removed weight over the total weight before the pass.
  double removed_fraction = 0.0;
};

struct StepReport {
  double t = 0.0;
  BreedReport breed;
  std::size_t diverged = 0;
  std::uint64_t real_hash = 0;
  double control = 0.0;  ///< feedback control applied during the step
};

/// M weighted trajectories integrated in lock-step.  Every step shares one
/// real-noise increment vector and one FeedbackContext across all paths;
/// each path draws fictitious noise from its own stream, derived from
/// (seed_fict, realization, path index), so results do not depend on the
/// number of worker threads.
class TrajectoryEnsemble {
 public:
  /// Samples M initial states from the model.
  TrajectoryEnsemble(std::shared_ptr<const CoefficientModel> model, EnsembleConfig config);

  /// Explicit population, for synthetic ensembles.
  TrajectoryEnsemble(std::shared_ptr<const CoefficientModel> model, EnsembleConfig config,
                     std::vector<StateVector> states, std::vector<double> log_weights);

  std::size_t size() const { return states_.size(); }
  double time() const { return t_; }
  const EnsembleConfig& config() const { return config_; }
  const CoefficientModel& model() const { return *model_; }
  std::span<const StateVector> states() const { return states_; }
  std::span<const double> log_weights() const { return log_weights_; }
  std::size_t divergence_count() const { return divergence_count_; }

  /// exp(log w - max log w).  Throws EnsembleCollapsed if all weights vanish.
  std::vector<double> linear_weights() const;

  WeightedValue weighted_average(const PathFunction& f) const;
  WeightedValue measure(const Observable& obs) const;
  double effective_sample_size() const;

  FeedbackContext compute_context() const;

  /// Next real increment vector from this realization's real stream.
  std::vector<double> draw_real_increments();

  StepReport step();
  StepReport step(std::span<const double> real_increments);

  /// Replaces negligible paths until none is below tolerance, or until
  /// `max_events` replacements have been made.
  BreedReport breed(std::size_t max_events = std::numeric_limits<std::size_t>::max());

 private:
  double weighted_mean(const PathFunction& f, std::span<const double> weights) const;

  std::shared_ptr<const CoefficientModel> model_;
  EnsembleConfig config_;
  std::vector<StateVector> states_;
  std::vector<double> log_weights_;
  std::vector<NormalStream> fict_streams_;
  NormalStream real_stream_;
  double t_ = 0.0;
  std::uint64_t step_index_ = 0;
  std::size_t divergence_count_ = 0;

  std::unique_ptr<WorkerPool> pool_;
  std::vector<StepWorkspace> workspaces_;
  std::vector<std::vector<double>> fict_scratch_;
  std::vector<unsigned char> diverged_;
  std::vector<std::uint64_t> seen_hash_;
};

}  // namespace wsde
