#pragma once

#include <cstdint>
#include <string>

#include "wsde/ensemble/ensemble.hpp"
#include "wsde/ensemble/experiment.hpp"
#include "wsde/field/field_model.hpp"
#include "wsde/grid/wigner_grid.hpp"
#include "wsde/particle/particle_model.hpp"

namespace wsde {

enum class ModelKind { Particle, Field };

/// Everything a command needs, resolved from a YAML file plus CLI overrides.
/// Seeds are always explicit so that every run is reproducible.
struct RunConfig {
  ModelKind model = ModelKind::Particle;
  ParticleParams particle;
  FieldParams field;

  double dt = 0.002;
  double t_final = 8.0;
  std::size_t sample_every = 80;
  std::size_t trajectories = 2000;
  std::size_t realizations = 10;
  /// Index of the first realization; realization r uses the real stream
  /// derived from (seed_real, r).
  std::uint64_t first_realization = 0;

  bool breeding = true;
  double breed_tolerance = 1e-4;
  DivergencePolicy on_divergence = DivergencePolicy::Abort;
  int midpoint_iterations = 4;

  std::uint64_t seed_real = 1;
  std::uint64_t seed_fict = 2;
  std::size_t threads = 1;

  /// Reference grid for compare and the finest candidate for bench.
  GridSpec grid;
  /// Coarsest grid size tried by bench when matching accuracy.
  std::size_t bench_min_grid = 32;

  std::string out_dir = "out";

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Resolved configuration as ordered key/value pairs.  Output locations are
  /// left out so a replay into another directory echoes identically.  Files
  /// that describe a single realization omit the realization range as well
  /// and state their own index instead.
  ConfigEcho echo(bool include_range = true) const;

  EnsembleConfig ensemble_config(std::uint64_t realization) const;
  RunSchedule schedule() const;
  std::shared_ptr<const CoefficientModel> make_model() const;
};

/// Parses YAML text.  Unknown keys, wrong types and out-of-range values are
/// rejected with a ConfigError that names the key.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

std::string model_name(ModelKind kind);

}  // namespace wsde
