#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "wsde/core/stepper.hpp"
#include "wsde/ensemble/ensemble.hpp"
#include "wsde/ensemble/errors.hpp"
#include "wsde/ensemble/experiment.hpp"
#include "wsde/field/field_model.hpp"

using namespace wsde;

namespace {

FieldParams params(double gamma, double k_p, double x0, double n = 1.0) {
  FieldParams p;
  p.gamma = gamma;
  p.k_p = k_p;
  p.x0 = x0;
  p.particles = n;
  return p;
}

FeedbackContext ctx_of(double x_mean, double p_mean, double u) {
  FeedbackContext c;
  c.averages = {x_mean, p_mean};
  c.control = u;
  return c;
}

}  // namespace

TEST_CASE("coherent initial state") {
  NormalStream rng(1);
  SUBCASE("normalized ground state") {
    const FieldModel m(params(0.02, -1.35, 0.0));
    const StateVector s = m.sample_initial(rng);
    CHECK(std::abs(m.number(s) - 1.0) < 1e-8);
    CHECK(std::abs(m.position(s)) < 1e-12);
  }
  SUBCASE("displaced state has energy 3 and centre N x0") {
    const double x0 = std::sqrt(5.0);
    for (double n : {1.0, 2.5}) {
      const FieldModel m(params(0.02, -1.35, x0, n));
      const StateVector s = m.sample_initial(rng);
      CHECK(std::abs(m.energy(s).real() - 3.0 * n) < 1e-6 * n);
      CHECK(std::abs(m.position(s).real() - n * x0) < 1e-8);
      CHECK(std::abs(m.energy(s).imag()) < 1e-12);
      // xi is the conjugate of phi for a coherent state.
      for (std::size_t i = 0; i < m.params().modes; ++i) CHECK(s[2 * i + 1] == std::conj(s[2 * i]));
    }
  }
  SUBCASE("initial log-weights are zero and the draw consumes nothing") {
    const auto m = std::make_shared<FieldModel>(params(0.02, -1.35, 1.0));
    EnsembleConfig c;
    c.trajectories = 4;
    c.dt = 0.01;
    TrajectoryEnsemble e(m, c);
    for (double lw : e.log_weights()) CHECK(lw == 0.0);
    NormalStream r(5);
    m->sample_initial(r);
    CHECK(r.words_consumed() == 0);
  }
}

TEST_CASE("weight drift of a centred state") {
  const double gamma = 0.02;
  const FieldModel m(params(gamma, -1.35, 0.0));
  NormalStream rng(1);
  const StateVector s = m.sample_initial(rng);
  WeightCoefficients w;
  m.weight_coefficients(s, 0.0, ctx_of(0.0, 0.0, 0.0), w);
  CHECK(std::abs(m.position(s)) < 1e-12);
  CHECK(w.drift < 0.0);
  CHECK(w.drift == doctest::Approx(-2.0 * gamma * m.position_sq(s).real()).epsilon(1e-12));
  // Ground state: <x^2> = 1/2.
  CHECK(m.position_sq(s).real() == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("closed field dynamics") {
  const double x0 = std::sqrt(5.0);
  const FieldModel m(params(0.0, 0.0, x0));
  NormalStream rng(1);
  StateVector s = m.sample_initial(rng);
  const double dt = 1e-3;
  const Complex e0 = m.energy(s);
  const Complex n0 = m.number(s);
  double lw = 0.0;
  StepWorkspace ws;
  const FeedbackContext ctx = ctx_of(0.0, 0.0, 0.0);
  const std::vector<double> real{0.0};
  const std::vector<double> fict{0.0, 0.0};
  double max_e = 0.0, max_n = 0.0, max_x = 0.0;
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(step_trajectory(m, s, lw, i * dt, dt, real, fict, ctx, ws));
    const double t = (i + 1) * dt;
    max_e = std::max(max_e, std::abs(m.energy(s) - e0));
    max_n = std::max(max_n, std::abs(m.number(s) - n0));
    max_x = std::max(max_x, std::abs(m.position(s).real() - x0 * std::cos(t)));
  }
  CHECK(max_e < 1e-6);
  CHECK(max_n < 1e-6);
  CHECK(max_x < 1e-4);
  CHECK(lw == 0.0);
}

TEST_CASE("closed field ensemble keeps unit weights") {
  const auto m = std::make_shared<FieldModel>(params(0.0, -1.35, 1.0));
  EnsembleConfig c;
  c.trajectories = 8;
  c.dt = 0.01;
  c.seed_real = 1;
  c.seed_fict = 2;
  TrajectoryEnsemble e(m, c);
  for (int i = 0; i < 100; ++i) e.step();
  for (double lw : e.log_weights()) CHECK(lw == 0.0);
}

TEST_CASE("feedback cools the closed field deterministically") {
  // With gamma = 0 all paths stay identical, so the control acts on the exact
  // coherent state and the energy relaxes towards the zero-point value.
  const auto m = std::make_shared<FieldModel>(params(0.0, -1.35, std::sqrt(5.0)));
  EnsembleConfig c;
  c.trajectories = 2;
  c.dt = 0.005;
  const ExperimentRecord r = run_experiment(m, c, {10.0, 200});
  REQUIRE_FALSE(r.failed);
  const auto e = r.series("energy");
  CHECK(e.front().value == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(e.back().value < 0.6);
  for (const auto& v : r.series("norm")) CHECK(v.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("field divergence watch and parameter checks") {
  const FieldModel m(params(0.02, -1.35, 0.0));
  NormalStream rng(1);
  StateVector s = m.sample_initial(rng);
  CHECK_FALSE(m.diverged(s));
  for (auto& z : s) z *= 10.0;
  CHECK(m.diverged(s));

  FieldParams bad;
  bad.modes = 24;
  CHECK_THROWS_AS(FieldModel{bad}, ConfigError);
  bad = FieldParams{};
  bad.particles = 0.0;
  CHECK_THROWS_AS(FieldModel{bad}, ConfigError);
  bad = FieldParams{};
  bad.gamma = -0.1;
  CHECK_THROWS_AS(FieldModel{bad}, ConfigError);
}

TEST_CASE("spectral momentum of a boosted coherent state") {
  // phi = psi0(x) exp(i k0 x) carries momentum N k0 and energy (1 + k0^2) / 2.
  const FieldModel m(params(0.02, -1.35, 0.0));
  NormalStream rng(1);
  StateVector s = m.sample_initial(rng);
  const double k0 = 2.0 * std::numbers::pi / m.params().box_length * 3.0;
  for (std::size_t i = 0; i < m.params().modes; ++i) {
    const Complex phase = std::polar(1.0, k0 * m.params().x(i));
    s[2 * i] *= phase;
    s[2 * i + 1] *= std::conj(phase);
  }
  CHECK(m.momentum(s).real() == doctest::Approx(k0).epsilon(1e-8));
  CHECK(m.energy(s).real() == doctest::Approx(0.5 * (1.0 + k0 * k0)).epsilon(1e-6));
}
