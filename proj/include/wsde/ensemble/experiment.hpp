#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wsde/core/model.hpp"
#include "wsde/ensemble/ensemble.hpp"
#include "wsde/ensemble/noise_record.hpp"
#include "wsde/ensemble/stats.hpp"

namespace wsde {

struct RunSchedule {
  double t_final = 0.0;
  /// Record every `sample_every` steps; the final step is always recorded.
  std::size_t sample_every = 1;

  std::size_t step_count(double dt) const;
};

struct SampleRow {
  double t = 0.0;
  std::vector<WeightedValue> values;  // one per observable
  double ess = 0.0;
  std::size_t breed_events = 0;    // since the previous row
  double removed_weight = 0.0;     // since the previous row, summed fractions
  std::size_t divergences = 0;     // since the previous row
};

struct BreedEvent {
  double t = 0.0;
  std::size_t count = 0;
  double removed_fraction = 0.0;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct ExperimentRecord {
  std::string model;
  std::vector<std::string> observable_names;
  std::vector<SampleRow> rows;
  std::vector<BreedEvent> breed_log;
  NoiseRecord noise;
  std::vector<double> controls;  // applied feedback control, one per step
  ConfigEcho config_echo;
  std::uint64_t seed_real = 0;
  std::uint64_t seed_fict = 0;
  std::uint64_t realization = 0;
  std::size_t divergences = 0;
  bool failed = false;
  std::string diagnostic;

  /// Index of a named observable; throws std::out_of_range if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> times() const;
  std::vector<WeightedValue> series(const std::string& name) const;
};

/// Runs one realization from the model's initial-state sampler to t_final.
/// With `replay`, real increments come from the record instead of the real
/// stream.  Divergence (abort policy) and collapse produce a partial record
/// with failed = true.
ExperimentRecord run_experiment(std::shared_ptr<const CoefficientModel> model,
                                const EnsembleConfig& config, const RunSchedule& schedule,
                                const NoiseRecord* replay = nullptr);

/// Draws the real-noise path of one realization up front, exactly as
/// run_experiment would consume it.
NoiseRecord draw_noise_record(std::uint64_t seed_real, std::uint64_t realization,
                              std::size_t n_real, double dt, std::size_t steps);

}  // namespace wsde
