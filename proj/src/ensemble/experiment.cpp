#include "wsde/ensemble/experiment.hpp"

#include <cmath>
#include <stdexcept>

#include "wsde/ensemble/errors.hpp"

namespace wsde {

std::size_t RunSchedule::step_count(double dt) const {
  if (t_final < 0.0) throw ConfigError("t_final must be >= 0");
  const double steps = t_final / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    throw ConfigError("t_final must be an integer multiple of dt");
  }
  return static_cast<std::size_t>(rounded);
}

std::size_t ExperimentRecord::column(const std::string& name) const {
  for (std::size_t i = 0; i < observable_names.size(); ++i) {
    if (observable_names[i] == name) return i;
  }
  throw std::out_of_range("no observable named " + name);
}

std::vector<double> ExperimentRecord::times() const {
  std::vector<double> t;
  t.reserve(rows.size());
  for (const auto& r : rows) t.push_back(r.t);
  return t;
}

std::vector<WeightedValue> ExperimentRecord::series(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<WeightedValue> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.values[c]);
  return out;
}

NoiseRecord draw_noise_record(std::uint64_t seed_real, std::uint64_t realization,
                              std::size_t n_real, double dt, std::size_t steps) {
  NoiseRecord rec;
  rec.n_real = static_cast<std::uint32_t>(n_real);
  rec.dt = dt;
  rec.increments.resize(n_real * steps);
  auto stream = NormalStream::derive(seed_real, realization);
  const double scale = std::sqrt(dt);
  for (std::size_t s = 0; s < steps; ++s) {
    stream.fill(std::span<double>(rec.increments).subspan(s * n_real, n_real), scale);
  }
  return rec;
}

ExperimentRecord run_experiment(std::shared_ptr<const CoefficientModel> model,
                                const EnsembleConfig& config, const RunSchedule& schedule,
                                const NoiseRecord* replay) {
  if (schedule.sample_every < 1) throw ConfigError("sample_every must be >= 1");
  const std::size_t steps = schedule.step_count(config.dt);
  const std::size_t n_real = model->real_noise_count();
  if (replay) {
    if (replay->n_real != n_real) throw ConfigError("noise record n_real does not match the model");
    if (replay->dt != config.dt) throw ConfigError("noise record dt does not match the configuration");
    if (replay->steps() < steps) throw ConfigError("noise record is shorter than the run");
  }

  ExperimentRecord rec;
  rec.model = model->name();
  rec.seed_real = config.seed_real;
  rec.seed_fict = config.seed_fict;
  rec.realization = config.realization;
  rec.noise.n_real = static_cast<std::uint32_t>(n_real);
  rec.noise.dt = config.dt;
  rec.noise.increments.reserve(steps * n_real);
  rec.controls.reserve(steps);

  const auto observables = model->observables();
  for (const auto& o : observables) rec.observable_names.push_back(o.name);

  TrajectoryEnsemble ensemble(model, config);

  SampleRow pending;
  auto sample = [&] {
    SampleRow row = pending;
    row.t = ensemble.time();
    for (const auto& o : observables) row.values.push_back(ensemble.measure(o));
    row.ess = ensemble.effective_sample_size();
    rec.rows.push_back(std::move(row));
    pending = SampleRow{};
  };

  try {
    sample();
    for (std::size_t s = 0; s < steps; ++s) {
      StepReport report;
      if (replay) {
        const auto inc = replay->step(s);
        report = ensemble.step(inc);
        rec.noise.increments.insert(rec.noise.increments.end(), inc.begin(), inc.end());
      } else {
        const auto inc = ensemble.draw_real_increments();
        rec.noise.increments.insert(rec.noise.increments.end(), inc.begin(), inc.end());
        report = ensemble.step(inc);
      }
      rec.controls.push_back(report.control);
      pending.breed_events += report.breed.events;
      pending.removed_weight += report.breed.removed_fraction;
      pending.divergences += report.diverged;
      if (report.breed.events > 0) {
        rec.breed_log.push_back({report.t, report.breed.events, report.breed.removed_fraction});
      }
      if ((s + 1) % schedule.sample_every == 0 || s + 1 == steps) sample();
    }
  } catch (const DivergenceError& e) {
    rec.failed = true;
    rec.diagnostic = e.what();
  } catch (const EnsembleCollapsed& e) {
    rec.failed = true;
    rec.diagnostic = std::string(e.what()) + " at t=" + std::to_string(ensemble.time());
  }
  rec.divergences = ensemble.divergence_count();
  return rec;
}

}  // namespace wsde
