#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "wsde/ensemble/experiment.hpp"

namespace wsde {

/// CSV header for a record of the given model ("particle", "grid" or "field").
/// Particle and grid records share one schema; field records append norm,
/// norm_stderr and im_X.
std::vector<std::string> csv_columns(const std::string& model);

/// Writes "# key = value" comment lines followed by the header and one row per
/// sample.  Numbers use 17 significant digits, so equal records produce
/// byte-identical files.
void write_record_csv(std::ostream& out, const ExperimentRecord& record, const ConfigEcho& echo);
void write_record_csv(const std::filesystem::path& path, const ExperimentRecord& record,
                      const ConfigEcho& echo);

/// Cross-realization average of records that share sample times.
struct MeanCurve {
  std::string model;
  std::vector<std::string> observable_names;
  std::vector<double> t;
  /// values[i][k]: mean and standard error of observable k at time i.
  std::vector<std::vector<WeightedValue>> values;
  std::vector<double> ess;
  std::vector<double> breed_events;
  std::vector<double> removed_weight;
  std::size_t realizations = 0;

  std::vector<WeightedValue> series(const std::string& name) const;
};

/// Averages the given records; every record must have the same sample times.
/// The standard error is the cross-realization standard error of the mean.
MeanCurve realization_mean(const std::vector<const ExperimentRecord*>& records);

/// Same schema as write_record_csv; stderr columns hold cross-realization
/// standard errors and the bookkeeping columns hold realization means.
void write_mean_csv(const std::filesystem::path& path, const MeanCurve& curve,
                    const ConfigEcho& echo);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  ///< half-width of the shaded band; empty for none
  std::string color = "#1f77b4";
};

/// Self-contained SVG line plot; the config echo is embedded as a comment.
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, const ConfigEcho& echo);

void write_echo(std::ostream& out, const ConfigEcho& echo, const std::string& prefix = "# ");

}  // namespace wsde
