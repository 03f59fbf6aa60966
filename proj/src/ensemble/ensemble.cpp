#include "wsde/ensemble/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "wsde/ensemble/errors.hpp"

namespace wsde {

namespace {

std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

void EnsembleConfig::validate() const {
  if (trajectories < 1) throw ConfigError("trajectories must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(breed_tolerance > 0.0 && breed_tolerance < 1.0)) {
    throw ConfigError("breed_tolerance must lie in (0, 1)");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (midpoint_iterations < 1) throw ConfigError("midpoint_iterations must be >= 1");
}

TrajectoryEnsemble::TrajectoryEnsemble(std::shared_ptr<const CoefficientModel> model,
                                       EnsembleConfig config)
    : model_(std::move(model)),
      config_(config),
      real_stream_(NormalStream::derive(config.seed_real, config.realization)) {
  config_.validate();
  const std::size_t m_count = config_.trajectories;
  fict_streams_.reserve(m_count);
  states_.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    fict_streams_.push_back(NormalStream::derive(config_.seed_fict, config_.realization, m));
    states_.push_back(model_->sample_initial(fict_streams_.back()));
    if (states_.back().size() != model_->dimension()) {
      throw std::logic_error("sample_initial returned wrong dimension");
    }
  }
  log_weights_.assign(m_count, 0.0);
  pool_ = std::make_unique<WorkerPool>(config_.threads);
  workspaces_.resize(pool_->size());
  fict_scratch_.resize(pool_->size());
}

TrajectoryEnsemble::TrajectoryEnsemble(std::shared_ptr<const CoefficientModel> model,
                                       EnsembleConfig config, std::vector<StateVector> states,
                                       std::vector<double> log_weights)
    : model_(std::move(model)),
      config_(config),
      states_(std::move(states)),
      log_weights_(std::move(log_weights)),
      real_stream_(NormalStream::derive(config.seed_real, config.realization)) {
  config_.trajectories = states_.size();
  config_.validate();
  if (log_weights_.size() != states_.size()) {
    throw std::invalid_argument("TrajectoryEnsemble: weight count differs from state count");
  }
  for (const auto& s : states_) {
    if (s.size() != model_->dimension()) throw std::invalid_argument("TrajectoryEnsemble: bad state dimension");
  }
  for (std::size_t m = 0; m < states_.size(); ++m) {
    fict_streams_.push_back(NormalStream::derive(config_.seed_fict, config_.realization, m));
  }
  pool_ = std::make_unique<WorkerPool>(config_.threads);
  workspaces_.resize(pool_->size());
  fict_scratch_.resize(pool_->size());
}

std::vector<double> TrajectoryEnsemble::linear_weights() const {
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  if (!std::isfinite(top)) throw EnsembleCollapsed();
  std::vector<double> w(log_weights_.size());
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = std::exp(log_weights_[m] - top);
  return w;
}

WeightedValue TrajectoryEnsemble::weighted_average(const PathFunction& f) const {
  return measure(Observable::mean("f", f));
}

WeightedValue TrajectoryEnsemble::measure(const Observable& obs) const {
  const auto w = linear_weights();
  std::vector<std::vector<double>> values(obs.inputs.size(), std::vector<double>(size()));
  for (std::size_t k = 0; k < obs.inputs.size(); ++k) {
    for (std::size_t m = 0; m < size(); ++m) values[k][m] = obs.inputs[k](states_[m]);
  }
  return weighted_statistic(w, values, obs.combine);
}

double TrajectoryEnsemble::effective_sample_size() const {
  return wsde::effective_sample_size(linear_weights());
}

double TrajectoryEnsemble::weighted_mean(const PathFunction& f,
                                         std::span<const double> weights) const {
  std::vector<double> terms(size());
  for (std::size_t m = 0; m < size(); ++m) terms[m] = weights[m] * f(states_[m]);
  return pairwise_sum(terms) / pairwise_sum(weights);
}

FeedbackContext TrajectoryEnsemble::compute_context() const {
  const auto w = linear_weights();
  const auto observables = model_->context_observables();
  std::vector<double> averages;
  averages.reserve(observables.size());
  for (const auto& obs : observables) {
    std::vector<double> means;
    for (const auto& f : obs.inputs) means.push_back(weighted_mean(f, w));
    averages.push_back(obs.combine(means));
  }
  FeedbackContext ctx = model_->make_context(averages);
  for (double a : ctx.averages) {
    if (!std::isfinite(a)) throw DivergenceError("feedback context is not finite");
  }
  if (!std::isfinite(ctx.control)) throw DivergenceError("feedback control is not finite");
  return ctx;
}

std::vector<double> TrajectoryEnsemble::draw_real_increments() {
  std::vector<double> inc(model_->real_noise_count());
  real_stream_.fill(inc, std::sqrt(config_.dt));
  return inc;
}

StepReport TrajectoryEnsemble::step() {
  const auto inc = draw_real_increments();
  return step(inc);
}

StepReport TrajectoryEnsemble::step(std::span<const double> real_increments) {
  if (real_increments.size() != model_->real_noise_count()) {
    throw std::invalid_argument("step: real increment count mismatch");
  }
  const FeedbackContext ctx = compute_context();
  const std::size_t m_count = size();
  const std::size_t n_fict = model_->fict_noise_count();
  const double dt = config_.dt;
  const double scale = std::sqrt(dt);
  const StepperOptions options{config_.midpoint_iterations};
  const double t = t_;

  diverged_.assign(m_count, 0);
  if (config_.check_shared_noise) seen_hash_.assign(m_count, 0);

  pool_->parallel_for(m_count, [&](std::size_t worker, std::size_t begin, std::size_t end) {
    auto& ws = workspaces_[worker];
    auto& fict = fict_scratch_[worker];
    fict.resize(n_fict);
    for (std::size_t m = begin; m < end; ++m) {
      fict_streams_[m].fill(fict, scale);
      if (config_.check_shared_noise) seen_hash_[m] = fnv1a(real_increments);
      if (!std::isfinite(log_weights_[m])) continue;
      const bool ok = step_trajectory(*model_, states_[m], log_weights_[m], t, dt, real_increments,
                                      fict, ctx, ws, options);
      if (!ok) diverged_[m] = 1;
    }
  });

  StepReport report;
  report.real_hash = fnv1a(real_increments);
  report.control = ctx.control;
  if (config_.check_shared_noise) {
    for (std::uint64_t h : seen_hash_) {
      if (h != report.real_hash) throw std::logic_error("shared real-noise contract violated");
    }
  }

  for (std::size_t m = 0; m < m_count; ++m) {
    if (!diverged_[m]) continue;
    if (config_.on_divergence == DivergencePolicy::Abort) {
      std::ostringstream msg;
      msg << "trajectory " << m << " diverged in step starting at t=" << t;
      throw DivergenceError(msg.str());
    }
    log_weights_[m] = -std::numeric_limits<double>::infinity();
    ++report.diverged;
  }
  divergence_count_ += report.diverged;

  // Keep the largest log-weight at zero; a common shift changes no average.
  const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
  if (!std::isfinite(top)) throw EnsembleCollapsed();
  if (top != 0.0) {
    for (double& lw : log_weights_) lw -= top;
  }

  t_ = static_cast<double>(++step_index_) * dt;
  report.t = t_;
  if (config_.breeding) report.breed = breed();
  return report;
}

BreedReport TrajectoryEnsemble::breed(std::size_t max_events) {
  BreedReport report;
  const std::size_t m_count = size();
  auto w = linear_weights();
  double total = pairwise_sum(w);
  if (!(total > 0.0)) throw EnsembleCollapsed();
  const double initial_total = total;
  const double eps = config_.breed_tolerance;
  const double n = static_cast<double>(m_count);

  double removed = 0.0;
  while (report.events < max_events) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t m = 1; m < m_count; ++m) {
      if (w[m] < w[lo]) lo = m;
      if (w[m] > w[hi]) hi = m;
    }
    if (!(w[lo] < eps * total / n)) break;
    if (lo == hi) throw EnsembleCollapsed();
    states_[lo] = states_[hi];
    removed += w[lo];
    total -= w[lo];
    w[hi] *= 0.5;
    w[lo] = w[hi];
    log_weights_[hi] -= std::numbers::ln2;
    log_weights_[lo] = log_weights_[hi];
    ++report.events;
  }
  report.removed_fraction = removed / initial_total;
  return report;
}

}  // namespace wsde
