#include "wsde/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "wsde/ensemble/errors.hpp"
#include "wsde/grid/wigner_grid.hpp"

namespace wsde {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string indexed(const std::string& stem, std::uint64_t index, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04llu.%s", stem.c_str(),
                static_cast<unsigned long long>(index), ext.c_str());
  return buf;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::ofstream open_text(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::vector<double> values_of(const std::vector<WeightedValue>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x.value);
  return out;
}

std::vector<double> errors_of(const std::vector<WeightedValue>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x.std_err);
  return out;
}

void write_summary(const fs::path& path, const RunConfig& cfg, const std::string& command,
                   const std::vector<ExperimentRecord>& records, double seconds, int exit_code) {
  auto out = open_text(path);
  write_echo(out, cfg.echo());
  out << "command: " << command << '\n';
  out << "wall_seconds: " << fmt(seconds) << '\n';
  std::size_t failed = 0;
  for (const ExperimentRecord& r : records) {
    out << "realization " << r.realization << ": "
        << (r.failed ? "FAILED (" + r.diagnostic + ")" : std::string("ok"))
        << ", samples " << r.rows.size() << ", divergences " << r.divergences << ", breed events "
        << r.breed_log.size() << '\n';
    failed += r.failed;
  }
  out << "failed: " << failed << " of " << records.size() << '\n';
  out << "exit_code: " << exit_code << '\n';
}

void write_run_plots(const fs::path& dir, const MeanCurve& mean, const ConfigEcho& echo) {
  const auto energy = mean.series("energy");
  write_svg_plot(dir / "energy.svg",
                 "Energy, mean of " + std::to_string(mean.realizations) + " realizations", "t",
                 "energy", {{"energy", mean.t, values_of(energy), errors_of(energy), "#1f77b4"}},
                 echo);
  if (mean.model == "field") {
    const auto norm = mean.series("norm");
    write_svg_plot(dir / "norm.svg", "Particle number", "t", "N",
                   {{"norm", mean.t, values_of(norm), errors_of(norm), "#2ca02c"}}, echo);
  }
}

}  // namespace

int exit_code_for(std::size_t failed, std::size_t total) {
  if (failed == 0) return kExitOk;
  return failed >= total ? kExitNumerical : kExitPartial;
}

RunOutcome cmd_run(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto start = Clock::now();
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  const auto model = cfg.make_model();
  const ConfigEcho echo = cfg.echo();

  RunOutcome outcome;
  for (std::size_t i = 0; i < cfg.realizations; ++i) {
    const std::uint64_t r = cfg.first_realization + i;
    const auto t0 = Clock::now();
    ExperimentRecord rec = run_experiment(model, cfg.ensemble_config(r), cfg.schedule());
    rec.config_echo = cfg.echo(false);
    write_record_csv(dir / indexed("realization", r, "csv"), rec, rec.config_echo);
    rec.noise.save(dir / indexed("noise", r, "bin"));
    log << "realization " << r << ": " << (rec.failed ? "FAILED (" + rec.diagnostic + ")" : "ok")
        << " in " << fmt(seconds_since(t0), "%.1f") << " s\n";
    outcome.failed += rec.failed;
    outcome.records.push_back(std::move(rec));
  }

  std::vector<const ExperimentRecord*> complete;
  for (const auto& r : outcome.records)
    if (!r.failed) complete.push_back(&r);
  if (!complete.empty()) {
    outcome.mean = realization_mean(complete);
    write_mean_csv(dir / "mean.csv", *outcome.mean, echo);
    write_run_plots(dir, *outcome.mean, echo);
  }
  outcome.seconds = seconds_since(start);
  outcome.exit_code = exit_code_for(outcome.failed, outcome.records.size());
  write_summary(dir / "summary.txt", cfg, "run", outcome.records, outcome.seconds,
                outcome.exit_code);
  return outcome;
}

RunOutcome cmd_replay(const RunConfig& cfg, const std::string& noise_path, std::ostream& log) {
  cfg.validate();
  const auto start = Clock::now();
  NoiseRecord noise;
  try {
    noise = NoiseRecord::load(noise_path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot use noise record '" + noise_path + "': " + e.what());
  }
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  const auto model = cfg.make_model();
  const std::uint64_t r = cfg.first_realization;

  RunOutcome outcome;
  ExperimentRecord rec = run_experiment(model, cfg.ensemble_config(r), cfg.schedule(), &noise);
  rec.config_echo = cfg.echo(false);
  write_record_csv(dir / indexed("realization", r, "csv"), rec, rec.config_echo);
  log << "replayed realization " << r << ": "
      << (rec.failed ? "FAILED (" + rec.diagnostic + ")" : "ok") << '\n';
  outcome.failed = rec.failed;
  outcome.records.push_back(std::move(rec));
  outcome.seconds = seconds_since(start);
  outcome.exit_code = exit_code_for(outcome.failed, 1);
  write_summary(dir / "summary.txt", cfg, "replay " + noise_path, outcome.records,
                outcome.seconds, outcome.exit_code);
  return outcome;
}

std::vector<double> combined_z(const std::vector<WeightedValue>& a,
                               const std::vector<WeightedValue>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("combined_z: length mismatch");
  std::vector<double> z(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i].value - b[i].value;
    const double se = std::hypot(a[i].std_err, b[i].std_err);
    if (d == 0.0) z[i] = 0.0;
    else if (se == 0.0) z[i] = std::copysign(std::numeric_limits<double>::infinity(), d);
    else z[i] = d / se;
  }
  return z;
}

std::vector<WeightedValue> paired_difference(const std::vector<std::vector<double>>& a,
                                             const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("paired_difference: realization count mismatch");
  const std::size_t n = a.front().size();
  std::vector<WeightedValue> out(n);
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < a.size(); ++r) d[r] = a[r].at(i) - b[r].at(i);
    out[i] = mean_and_stderr(d);
  }
  return out;
}

std::optional<double> first_exceedance(const std::vector<double>& t, const std::vector<double>& z,
                                       double threshold) {
  for (std::size_t i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) > threshold) return t[i];
  return std::nullopt;
}

CompareReport cmd_compare(const RunConfig& cfg_in, std::ostream& log) {
  if (cfg_in.model != ModelKind::Particle) throw ConfigError("compare requires model: particle");
  cfg_in.validate();
  const auto start = Clock::now();
  const fs::path dir = cfg_in.out_dir;
  fs::create_directories(dir);
  const ConfigEcho echo = cfg_in.echo();
  const auto model = cfg_in.make_model();
  const RunSchedule schedule = cfg_in.schedule();

  RunConfig breed_cfg = cfg_in;
  breed_cfg.breeding = true;
  RunConfig plain_cfg = cfg_in;
  plain_cfg.breeding = false;

  CompareReport report;
  std::vector<std::vector<double>> e_grid, e_breed, e_plain;
  std::vector<ExperimentRecord> grids, breeds, plains;
  for (std::size_t i = 0; i < cfg_in.realizations; ++i) {
    const std::uint64_t r = cfg_in.first_realization + i;
    const auto t0 = Clock::now();
    ExperimentRecord breed = run_experiment(model, breed_cfg.ensemble_config(r), schedule);
    ExperimentRecord plain =
        run_experiment(model, plain_cfg.ensemble_config(r), schedule, &breed.noise);
    ExperimentRecord grid = run_grid_experiment(cfg_in.particle, cfg_in.grid, breed.noise, schedule);
    grid.realization = r;

    const bool failed = breed.failed || plain.failed || grid.failed;
    log << "realization " << r << ": "
        << (failed ? "FAILED (" + breed.diagnostic + plain.diagnostic + grid.diagnostic + ")"
                   : std::string("ok"))
        << " in " << fmt(seconds_since(t0), "%.1f") << " s\n";

    {
      auto out = open_text(dir / indexed("compare", r, "csv"));
      write_echo(out, cfg_in.echo(false));
      out << "# realization = " << r << '\n';
      out << "t,energy_grid,energy_breed,energy_breed_stderr,energy_nobreed,"
             "energy_nobreed_stderr,ess_breed,ess_nobreed\n";
      const std::size_t rows =
          std::min({breed.rows.size(), plain.rows.size(), grid.rows.size()});
      for (std::size_t k = 0; k < rows; ++k) {
        out << fmt(breed.rows[k].t, "%.17g") << ',' << fmt(grid.rows[k].values[0].value, "%.17g")
            << ',' << fmt(breed.rows[k].values[0].value, "%.17g") << ','
            << fmt(breed.rows[k].values[0].std_err, "%.17g") << ','
            << fmt(plain.rows[k].values[0].value, "%.17g") << ','
            << fmt(plain.rows[k].values[0].std_err, "%.17g") << ','
            << fmt(breed.rows[k].ess, "%.17g") << ',' << fmt(plain.rows[k].ess, "%.17g") << '\n';
      }
    }
    breed.noise.save(dir / indexed("noise", r, "bin"));

    if (failed) {
      ++report.failed;
      continue;
    }
    e_grid.push_back(values_of(grid.series("energy")));
    e_breed.push_back(values_of(breed.series("energy")));
    e_plain.push_back(values_of(plain.series("energy")));
    grids.push_back(std::move(grid));
    breeds.push_back(std::move(breed));
    plains.push_back(std::move(plain));
  }
  report.realizations = cfg_in.realizations;
  report.exit_code = exit_code_for(report.failed, cfg_in.realizations);

  if (!grids.empty()) {
    auto pointers = [](const std::vector<ExperimentRecord>& v) {
      std::vector<const ExperimentRecord*> p;
      for (const auto& r : v) p.push_back(&r);
      return p;
    };
    const MeanCurve mg = realization_mean(pointers(grids));
    const MeanCurve mb = realization_mean(pointers(breeds));
    const MeanCurve mp = realization_mean(pointers(plains));
    report.t = mg.t;
    report.grid = mg.series("energy");
    report.breed = mb.series("energy");
    report.no_breed = mp.series("energy");
    report.breed_z = combined_z(report.breed, report.grid);
    const auto diff = paired_difference(e_plain, e_grid);
    report.no_breed_z.resize(diff.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
      const double d = diff[i].value;
      report.no_breed_z[i] = d == 0.0 ? 0.0 : diff[i].std_err == 0.0
                                                  ? std::copysign(INFINITY, d)
                                                  : d / diff[i].std_err;
    }
    for (double z : report.breed_z)
      report.max_breed_discrepancy = std::max(report.max_breed_discrepancy, std::abs(z));
    report.departure_time = first_exceedance(report.t, report.no_breed_z, 3.0);

    {
      auto out = open_text(dir / "compare_mean.csv");
      write_echo(out, echo);
      out << "# realizations = " << grids.size() << '\n';
      out << "t,energy_grid,energy_grid_stderr,energy_breed,energy_breed_stderr,energy_nobreed,"
             "energy_nobreed_stderr,z_breed,z_nobreed_paired\n";
      for (std::size_t i = 0; i < report.t.size(); ++i) {
        out << fmt(report.t[i], "%.17g") << ',' << fmt(report.grid[i].value, "%.17g") << ','
            << fmt(report.grid[i].std_err, "%.17g") << ',' << fmt(report.breed[i].value, "%.17g")
            << ',' << fmt(report.breed[i].std_err, "%.17g") << ','
            << fmt(report.no_breed[i].value, "%.17g") << ','
            << fmt(report.no_breed[i].std_err, "%.17g") << ','
            << fmt(report.breed_z[i], "%.17g") << ',' << fmt(report.no_breed_z[i], "%.17g")
            << '\n';
      }
    }
    write_svg_plot(dir / "compare_energy.svg", "Grid vs weighted SDE ensembles", "t", "energy",
                   {{"grid", report.t, values_of(report.grid), {}, "#000000"},
                    {"WSDE, breeding", report.t, values_of(report.breed),
                     errors_of(report.breed), "#1f77b4"},
                    {"WSDE, no breeding", report.t, values_of(report.no_breed),
                     errors_of(report.no_breed), "#d62728"}},
                   echo);
  }
  report.seconds = seconds_since(start);

  auto out = open_text(dir / "compare_report.txt");
  write_echo(out, echo);
  out << "realizations: " << report.realizations << " (failed " << report.failed << ")\n";
  out << "max |E_breed - E_grid| / combined stderr: " << fmt(report.max_breed_discrepancy)
      << '\n';
  out << "no-breeding departure (>3 paired stderr): "
      << (report.departure_time ? "t = " + fmt(*report.departure_time) : std::string("none"))
      << '\n';
  out << "wall_seconds: " << fmt(report.seconds) << '\n';
  out << "exit_code: " << report.exit_code << '\n';
  log << "max breeding discrepancy " << fmt(report.max_breed_discrepancy)
      << " combined stderr; no-breeding departure "
      << (report.departure_time ? "at t = " + fmt(*report.departure_time) : std::string("none"))
      << '\n';
  return report;
}

BenchReport cmd_bench(const RunConfig& cfg_in, std::ostream& log) {
  if (cfg_in.model != ModelKind::Particle) throw ConfigError("bench requires model: particle");
  cfg_in.validate();
  const fs::path dir = cfg_in.out_dir;
  fs::create_directories(dir);
  const auto model = cfg_in.make_model();
  const RunSchedule schedule = cfg_in.schedule();
  const std::uint64_t r = cfg_in.first_realization;

  BenchReport rep;
  rep.trajectories = cfg_in.trajectories;

  auto t0 = Clock::now();
  const ExperimentRecord wsde = run_experiment(model, cfg_in.ensemble_config(r), schedule);
  rep.wsde_seconds = seconds_since(t0);
  if (wsde.failed) throw DivergenceError("bench ensemble run failed: " + wsde.diagnostic);

  RunConfig doubled = cfg_in;
  doubled.trajectories *= 2;
  t0 = Clock::now();
  run_experiment(model, doubled.ensemble_config(r), schedule, &wsde.noise);
  rep.wsde_double_seconds = seconds_since(t0);
  rep.scaling = rep.wsde_double_seconds / rep.wsde_seconds;

  std::vector<double> se = errors_of(wsde.series("energy"));
  se.erase(se.begin());  // the initial sample has no dynamics yet
  std::nth_element(se.begin(), se.begin() + se.size() / 2, se.end());
  rep.wsde_stderr = se.empty() ? 0.0 : se[se.size() / 2];
  log << "ensemble M=" << rep.trajectories << ": " << fmt(rep.wsde_seconds) << " s; 2M: "
      << fmt(rep.wsde_double_seconds) << " s; energy stderr " << fmt(rep.wsde_stderr) << '\n';

  // Grid candidates from coarse to the reference resolution; each is judged
  // against the grid with half its spacing.
  std::vector<std::size_t> sizes;
  for (std::size_t n = cfg_in.bench_min_grid; n <= cfg_in.grid.n_x; n *= 2) sizes.push_back(n);
  if (sizes.empty() || sizes.back() != cfg_in.grid.n_x) sizes.push_back(cfg_in.grid.n_x);
  std::vector<std::vector<double>> energies;
  for (std::size_t n : sizes) {
    GridSpec spec = cfg_in.grid;
    spec.n_x = spec.n_p = n;
    t0 = Clock::now();
    GridTrial trial{n, 0.0, -1.0};
    try {
      const ExperimentRecord g = run_grid_experiment(cfg_in.particle, spec, wsde.noise, schedule);
      trial.seconds = g.failed ? INFINITY : seconds_since(t0);
      energies.push_back(values_of(g.series("energy")));
    } catch (const ConfigError& e) {
      // Too coarse to hold the initial state inside the box.
      log << "grid n=" << n << " skipped: " << e.what() << '\n';
      trial.seconds = INFINITY;
      energies.emplace_back();
    }
    rep.grid_trials.push_back(trial);
  }
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (energies[i].empty() || energies[i + 1].empty()) {
      rep.grid_trials[i].error = INFINITY;
      continue;
    }
    double err = 0.0;
    const std::size_t rows = std::min(energies[i].size(), energies[i + 1].size());
    for (std::size_t k = 0; k < rows; ++k)
      err = std::max(err, std::abs(energies[i][k] - energies[i + 1][k]));
    if (rows < energies[i + 1].size()) err = INFINITY;
    rep.grid_trials[i].error = err;
  }
  const GridTrial* chosen = &rep.grid_trials.back();
  for (const GridTrial& t : rep.grid_trials) {
    if (t.error >= 0.0 && t.error < rep.wsde_stderr) {
      chosen = &t;
      rep.grid_matched = true;
      break;
    }
  }
  rep.grid_n = chosen->n;
  rep.grid_seconds = chosen->seconds;
  rep.grid_error = chosen->error;
  rep.ratio = rep.grid_seconds / rep.wsde_seconds;

  auto out = open_text(dir / "bench_report.txt");
  write_echo(out, cfg_in.echo());
  out << "wsde_trajectories: " << rep.trajectories << '\n';
  out << "wsde_seconds: " << fmt(rep.wsde_seconds) << '\n';
  out << "wsde_2m_seconds: " << fmt(rep.wsde_double_seconds) << '\n';
  out << "wsde_scaling_2m_over_m: " << fmt(rep.scaling) << '\n';
  out << "wsde_energy_stderr_median: " << fmt(rep.wsde_stderr) << '\n';
  for (const GridTrial& t : rep.grid_trials) {
    out << "grid_trial n=" << t.n << " seconds=" << fmt(t.seconds) << " error_vs_half_spacing="
        << (t.error >= 0.0 ? fmt(t.error) : std::string("n/a")) << '\n';
  }
  out << "grid_n: " << rep.grid_n << (rep.grid_matched ? "" : " (accuracy target not met)")
      << '\n';
  out << "grid_seconds: " << fmt(rep.grid_seconds) << '\n';
  out << "grid_error: " << (rep.grid_error >= 0.0 ? fmt(rep.grid_error) : std::string("n/a"))
      << '\n';
  out << "ratio_grid_over_wsde: " << fmt(rep.ratio) << '\n';
  log << "grid n=" << rep.grid_n << ": " << fmt(rep.grid_seconds) << " s; ratio "
      << fmt(rep.ratio) << '\n';
  return rep;
}

}  // namespace wsde
