#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "wsde/app/commands.hpp"
#include "wsde/ensemble/errors.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed_real;
  std::optional<std::uint64_t> seed_fict;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> realization;
  std::string replay;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "YAML configuration file")->required();
  cmd->add_option("--seed-real", o.seed_real, "master seed of the real (measurement) noise");
  cmd->add_option("--seed-fict", o.seed_fict, "master seed of the fictitious noises");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads per ensemble")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--realization", o.realization,
                  "index of the (first) realization; replay uses it to rebuild the fictitious "
                  "streams");
}

wsde::RunConfig resolve(const Overrides& o) {
  wsde::RunConfig cfg = wsde::load_config(o.config);
  if (o.seed_real) cfg.seed_real = *o.seed_real;
  if (o.seed_fict) cfg.seed_fict = *o.seed_fict;
  if (o.out) cfg.out_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.realization) cfg.first_realization = *o.realization;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted stochastic differential equation simulator for measured and "
               "feedback-controlled quantum systems"};
  app.require_subcommand(1);

  Overrides run_o, replay_o, compare_o, bench_o;
  auto* run = app.add_subcommand("run", "run independent realizations of a model");
  add_common(run, run_o);
  run->add_option("--replay", run_o.replay, "noise record to replay (single realization)");
  auto* replay = app.add_subcommand("replay", "re-run one realization from a noise record");
  add_common(replay, replay_o);
  replay->add_option("--replay", replay_o.replay, "noise record file")->required();
  auto* compare = app.add_subcommand("compare", "grid solver vs ensembles with and without breeding");
  add_common(compare, compare_o);
  auto* bench = app.add_subcommand("bench", "wall-clock comparison of ensemble and grid solvers");
  add_common(bench, bench_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = resolve(run_o);
      if (!run_o.replay.empty()) return wsde::cmd_replay(cfg, run_o.replay, std::cerr).exit_code;
      const auto outcome = wsde::cmd_run(cfg, std::cerr);
      std::cerr << "wrote " << cfg.out_dir << " (" << outcome.records.size() - outcome.failed
                << "/" << outcome.records.size() << " realizations ok)\n";
      return outcome.exit_code;
    }
    if (replay->parsed()) {
      const auto cfg = resolve(replay_o);
      return wsde::cmd_replay(cfg, replay_o.replay, std::cerr).exit_code;
    }
    if (compare->parsed()) return wsde::cmd_compare(resolve(compare_o), std::cerr).exit_code;
    if (bench->parsed()) {
      wsde::cmd_bench(resolve(bench_o), std::cerr);
      return wsde::kExitOk;
    }
  } catch (const wsde::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return wsde::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return wsde::kExitNumerical;
  }
  return wsde::kExitOk;
}
