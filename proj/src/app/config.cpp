#include "wsde/app/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "wsde/ensemble/errors.hpp"

namespace wsde {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void reject_unknown(const YAML::Node& node, const std::string& section,
                    const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError("section '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "'" +
                        (section.empty() ? std::string() : " in section '" + section + "'"));
    }
  }
}

std::string qualified(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

template <class T>
void read(const YAML::Node& node, const std::string& section, const std::string& key, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for '" + qualified(section, key) + "'");
  }
}

void read_size(const YAML::Node& node, const std::string& section, const std::string& key,
               std::size_t& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  long long value = 0;
  try {
    value = v.as<long long>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for '" + qualified(section, key) + "': expected an integer");
  }
  if (value < 0) throw ConfigError("'" + qualified(section, key) + "' must be non-negative");
  out = static_cast<std::size_t>(value);
}

void read_seed(const YAML::Node& node, const std::string& section, const std::string& key,
               std::uint64_t& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for '" + qualified(section, key) +
                      "': expected an unsigned integer");
  }
}

}  // namespace

std::string model_name(ModelKind kind) { return kind == ModelKind::Particle ? "particle" : "field"; }

void RunConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be >= 0");
  if (sample_every < 1) throw ConfigError("sample_every must be >= 1");
  if (trajectories < 1) throw ConfigError("trajectories must be >= 1");
  if (realizations < 1) throw ConfigError("realizations must be >= 1");
  if (breeding && !(breed_tolerance > 0.0 && breed_tolerance < 1.0))
    throw ConfigError("breeding.tolerance must lie in (0, 1)");
  if (midpoint_iterations < 1) throw ConfigError("midpoint_iterations must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (bench_min_grid < 4) throw ConfigError("bench.min_grid must be >= 4");
  particle.validate();
  field.validate();
  grid.validate();
  try {
    schedule().step_count(dt);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

ConfigEcho RunConfig::echo(bool include_range) const {
  ConfigEcho e;
  e.emplace_back("model", model_name(model));
  e.emplace_back("dt", format_double(dt));
  e.emplace_back("t_final", format_double(t_final));
  e.emplace_back("sample_every", std::to_string(sample_every));
  e.emplace_back("trajectories", std::to_string(trajectories));
  if (include_range) {
    e.emplace_back("realizations", std::to_string(realizations));
    e.emplace_back("first_realization", std::to_string(first_realization));
  }
  e.emplace_back("breeding.enabled", breeding ? "true" : "false");
  e.emplace_back("breeding.tolerance", format_double(breed_tolerance));
  e.emplace_back("divergence", on_divergence == DivergencePolicy::Abort ? "abort" : "zero_weight");
  e.emplace_back("midpoint_iterations", std::to_string(midpoint_iterations));
  e.emplace_back("seeds.real", std::to_string(seed_real));
  e.emplace_back("seeds.fict", std::to_string(seed_fict));
  if (model == ModelKind::Particle) {
    e.emplace_back("particle.gamma", format_double(particle.gamma));
    e.emplace_back("particle.k_p", format_double(particle.k_p));
    e.emplace_back("particle.x0", format_double(particle.x0));
  } else {
    e.emplace_back("field.modes", std::to_string(field.modes));
    e.emplace_back("field.box_length", format_double(field.box_length));
    e.emplace_back("field.N", format_double(field.particles));
    e.emplace_back("field.gamma", format_double(field.gamma));
    e.emplace_back("field.k_p", format_double(field.k_p));
    e.emplace_back("field.x0", format_double(field.x0));
    e.emplace_back("field.amplitude_limit", format_double(field.amplitude_limit));
  }
  e.emplace_back("grid.nx", std::to_string(grid.n_x));
  e.emplace_back("grid.np", std::to_string(grid.n_p));
  e.emplace_back("grid.lx", format_double(grid.l_x));
  e.emplace_back("grid.lp", format_double(grid.l_p));
  return e;
}

EnsembleConfig RunConfig::ensemble_config(std::uint64_t realization) const {
  EnsembleConfig c;
  c.trajectories = trajectories;
  c.dt = dt;
  c.breed_tolerance = breed_tolerance;
  c.breeding = breeding;
  c.on_divergence = on_divergence;
  c.seed_real = seed_real;
  c.seed_fict = seed_fict;
  c.realization = realization;
  c.threads = threads;
  c.midpoint_iterations = midpoint_iterations;
  return c;
}

RunSchedule RunConfig::schedule() const {
  RunSchedule s;
  s.t_final = t_final;
  s.sample_every = sample_every;
  return s;
}

std::shared_ptr<const CoefficientModel> RunConfig::make_model() const {
  if (model == ModelKind::Particle) return std::make_shared<ParticleModel>(particle);
  return std::make_shared<FieldModel>(field);
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig c;
  if (!root || root.IsNull()) return c;
  reject_unknown(root, "",
                 {"model", "dt", "t_final", "sample_every", "trajectories", "realizations",
                  "first_realization", "breeding", "divergence", "midpoint_iterations", "seeds",
                  "threads", "particle", "field", "grid", "bench", "output"});

  if (root["model"]) {
    std::string m;
    read(root, "", "model", m);
    if (m == "particle") c.model = ModelKind::Particle;
    else if (m == "field") c.model = ModelKind::Field;
    else throw ConfigError("model must be 'particle' or 'field', got '" + m + "'");
  }
  read(root, "", "dt", c.dt);
  read(root, "", "t_final", c.t_final);
  read_size(root, "", "sample_every", c.sample_every);
  read_size(root, "", "trajectories", c.trajectories);
  read_size(root, "", "realizations", c.realizations);
  read_seed(root, "", "first_realization", c.first_realization);
  read(root, "", "midpoint_iterations", c.midpoint_iterations);
  read_size(root, "", "threads", c.threads);

  if (const auto b = root["breeding"]) {
    reject_unknown(b, "breeding", {"enabled", "tolerance"});
    read(b, "breeding", "enabled", c.breeding);
    read(b, "breeding", "tolerance", c.breed_tolerance);
  }
  if (root["divergence"]) {
    std::string d;
    read(root, "", "divergence", d);
    if (d == "abort") c.on_divergence = DivergencePolicy::Abort;
    else if (d == "zero_weight") c.on_divergence = DivergencePolicy::ZeroWeight;
    else throw ConfigError("divergence must be 'abort' or 'zero_weight', got '" + d + "'");
  }
  if (const auto s = root["seeds"]) {
    reject_unknown(s, "seeds", {"real", "fict"});
    read_seed(s, "seeds", "real", c.seed_real);
    read_seed(s, "seeds", "fict", c.seed_fict);
  }
  if (const auto p = root["particle"]) {
    reject_unknown(p, "particle", {"gamma", "k_p", "x0"});
    read(p, "particle", "gamma", c.particle.gamma);
    read(p, "particle", "k_p", c.particle.k_p);
    read(p, "particle", "x0", c.particle.x0);
  }
  if (const auto f = root["field"]) {
    reject_unknown(f, "field", {"modes", "box_length", "N", "gamma", "k_p", "x0", "amplitude_limit"});
    read_size(f, "field", "modes", c.field.modes);
    read(f, "field", "box_length", c.field.box_length);
    read(f, "field", "N", c.field.particles);
    read(f, "field", "gamma", c.field.gamma);
    read(f, "field", "k_p", c.field.k_p);
    read(f, "field", "x0", c.field.x0);
    read(f, "field", "amplitude_limit", c.field.amplitude_limit);
  }
  if (const auto g = root["grid"]) {
    reject_unknown(g, "grid", {"nx", "np", "lx", "lp"});
    read_size(g, "grid", "nx", c.grid.n_x);
    read_size(g, "grid", "np", c.grid.n_p);
    read(g, "grid", "lx", c.grid.l_x);
    read(g, "grid", "lp", c.grid.l_p);
  }
  if (const auto b = root["bench"]) {
    reject_unknown(b, "bench", {"min_grid"});
    read_size(b, "bench", "min_grid", c.bench_min_grid);
  }
  if (const auto o = root["output"]) {
    reject_unknown(o, "output", {"dir"});
    read(o, "output", "dir", c.out_dir);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace wsde
