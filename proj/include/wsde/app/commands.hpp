#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wsde/app/config.hpp"
#include "wsde/app/output.hpp"

namespace wsde {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitPartial = 3 };

/// 0 if nothing failed, 3 if some realizations failed, 2 if all failed.
int exit_code_for(std::size_t failed, std::size_t total);

struct RunOutcome {
  std::vector<ExperimentRecord> records;
  std::optional<MeanCurve> mean;  ///< over the realizations that completed
  std::size_t failed = 0;
  double seconds = 0.0;
  int exit_code = kExitOk;
};

/// Runs cfg.realizations independent realizations and writes, under
/// cfg.out_dir: realization_NNNN.csv, noise_NNNN.bin, mean.csv, energy.svg
/// (field runs also norm.svg) and summary.txt.
RunOutcome cmd_run(const RunConfig& cfg, std::ostream& log);

/// Re-runs realization cfg.first_realization with the real increments read
/// from `noise_path` and writes realization_NNNN.csv and summary.txt.  The CSV
/// is byte-identical to the one written by the original run.
RunOutcome cmd_replay(const RunConfig& cfg, const std::string& noise_path, std::ostream& log);

/// (a - b) / sqrt(se_a^2 + se_b^2) per sample; 0 where both agree exactly.
std::vector<double> combined_z(const std::vector<WeightedValue>& a,
                               const std::vector<WeightedValue>& b);

/// Mean and standard error over realizations of a[r][i] - b[r][i].
std::vector<WeightedValue> paired_difference(const std::vector<std::vector<double>>& a,
                                             const std::vector<std::vector<double>>& b);

/// First time at which |z| exceeds the threshold.
std::optional<double> first_exceedance(const std::vector<double>& t, const std::vector<double>& z,
                                       double threshold);

struct CompareReport {
  std::vector<double> t;
  std::vector<WeightedValue> grid;      ///< realization-mean energies
  std::vector<WeightedValue> breed;
  std::vector<WeightedValue> no_breed;
  /// Breeding run against the grid, in combined standard errors of the two
  /// realization-mean curves.
  std::vector<double> breed_z;
  /// Non-breeding run against the grid, in standard errors of the paired
  /// per-realization difference.
  std::vector<double> no_breed_z;
  double max_breed_discrepancy = 0.0;
  std::optional<double> departure_time;
  std::size_t realizations = 0;
  std::size_t failed = 0;
  double seconds = 0.0;
  int exit_code = kExitOk;
};

/// Runs the grid solver, the weighted ensemble with breeding and the weighted
/// ensemble without breeding on the same real-noise record per realization.
/// Writes compare_NNNN.csv per realization, compare_mean.csv,
/// compare_energy.svg and compare_report.txt.  Particle model only.
CompareReport cmd_compare(const RunConfig& cfg, std::ostream& log);

struct GridTrial {
  std::size_t n = 0;
  double seconds = 0.0;
  /// max over samples of |E_n - E_2n|; negative when no finer grid was run.
  double error = -1.0;
};

struct BenchReport {
  std::size_t trajectories = 0;
  double wsde_seconds = 0.0;
  double wsde_double_seconds = 0.0;  ///< same run with 2M trajectories
  double scaling = 0.0;              ///< wsde_double_seconds / wsde_seconds
  double wsde_stderr = 0.0;          ///< median energy stderr of the M run
  std::vector<GridTrial> grid_trials;
  std::size_t grid_n = 0;
  double grid_seconds = 0.0;
  double grid_error = 0.0;
  bool grid_matched = false;  ///< a grid met the accuracy target
  double ratio = 0.0;         ///< grid_seconds / wsde_seconds
};

/// Times the weighted ensemble at M and 2M and the grid solver at the
/// coarsest resolution whose discretization error (against the grid with
/// half the spacing) is below the ensemble's energy standard error.  Writes
/// bench_report.txt.  Particle model only.
BenchReport cmd_bench(const RunConfig& cfg, std::ostream& log);

}  // namespace wsde
