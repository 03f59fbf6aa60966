#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "wsde/ensemble/ensemble.hpp"
#include "wsde/ensemble/errors.hpp"
#include "wsde/ensemble/experiment.hpp"
#include "wsde/field/field_model.hpp"
#include "wsde/particle/particle_model.hpp"

using namespace wsde;

namespace {

std::shared_ptr<const ParticleModel> particle(double gamma = 1.0, double k_p = -1.35,
                                              double x0 = std::sqrt(5.0)) {
  return std::make_shared<ParticleModel>(ParticleParams{gamma, k_p, x0});
}

EnsembleConfig small_config(std::size_t m, std::size_t threads = 1) {
  EnsembleConfig c;
  c.trajectories = m;
  c.dt = 1e-2;
  c.seed_real = 1;
  c.seed_fict = 2;
  c.threads = threads;
  return c;
}

std::vector<StateVector> particles_at(const std::vector<std::pair<double, double>>& xp) {
  std::vector<StateVector> out;
  for (auto [x, p] : xp) out.push_back({Complex(x), Complex(p)});
  return out;
}

double x_of(std::span<const Complex> s) { return s[0].real(); }

}  // namespace

TEST_CASE("weighted averages reduce to simple arithmetic") {
  const auto model = particle();
  SUBCASE("uniform weights") {
    TrajectoryEnsemble e(model, small_config(3), particles_at({{1, 0}, {2, 0}, {3, 0}}),
                         {0.0, 0.0, 0.0});
    CHECK(e.weighted_average(x_of).value == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("weights 1 and 3") {
    TrajectoryEnsemble e(model, small_config(2), particles_at({{0, 0}, {4, 0}}),
                         {0.0, std::log(3.0)});
    CHECK(e.weighted_average(x_of).value == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("constant function is exactly one") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 3.0);
    std::vector<double> lw;
    std::vector<std::pair<double, double>> xp;
    for (int m = 0; m < 37; ++m) {
      lw.push_back(g(rng));
      xp.push_back({g(rng), g(rng)});
    }
    TrajectoryEnsemble e(model, small_config(37), particles_at(xp), lw);
    CHECK(e.weighted_average([](std::span<const Complex>) { return 1.0; }).value == 1.0);
  }
}

TEST_CASE("jackknife stderr of a uniform mean equals the textbook value") {
  const auto model = particle();
  const std::vector<double> xs{0.3, -1.2, 2.5, 0.9, 1.7, -0.4};
  std::vector<std::pair<double, double>> xp;
  for (double x : xs) xp.push_back({x, 0.0});
  TrajectoryEnsemble e(model, small_config(xs.size()), particles_at(xp),
                       std::vector<double>(xs.size(), 0.0));
  const WeightedValue v = e.weighted_average(x_of);
  CHECK(v.std_err == doctest::Approx(mean_and_stderr(xs).std_err).epsilon(1e-12));
}

TEST_CASE("adding a constant to every log-weight changes no observable") {
  const auto model = particle();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::pair<double, double>> xp;
  std::vector<double> lw;
  for (int m = 0; m < 50; ++m) {
    xp.push_back({g(rng) + 2.0, g(rng)});
    lw.push_back(2.0 * g(rng));
  }
  TrajectoryEnsemble a(model, small_config(50), particles_at(xp), lw);
  for (double c : {-700.0, -3.7, 42.0, 650.0}) {
    std::vector<double> shifted = lw;
    for (double& v : shifted) v += c;
    TrajectoryEnsemble b(model, small_config(50), particles_at(xp), shifted);
    const auto obs_a = model->observables();
    for (const Observable& o : obs_a) {
      const double va = a.measure(o).value;
      const double vb = b.measure(o).value;
      CHECK(std::abs(va - vb) <= 1e-12 * std::max(1.0, std::abs(va)));
    }
  }
}

TEST_CASE("feedback context from the ensemble averages") {
  const auto model = particle(1.0, -1.35);
  SUBCASE("all paths at p = 0.5") {
    TrajectoryEnsemble e(model, small_config(3), particles_at({{1, 0.5}, {-2, 0.5}, {0, 0.5}}),
                         {0.0, -1.0, 0.5});
    CHECK(e.compute_context().control == doctest::Approx(-0.675).epsilon(1e-15));
  }
  SUBCASE("symmetric momenta") {
    TrajectoryEnsemble e(model, small_config(2), particles_at({{0, -1}, {0, 1}}), {0.0, 0.0});
    CHECK(e.compute_context().control == 0.0);
  }
  SUBCASE("field centre of mass") {
    FieldParams fp;
    fp.modes = 16;
    const auto field = std::make_shared<FieldModel>(fp);
    // Put all density on one node so that X = x_i * phi_i * xi_i * dx.
    const std::size_t node = 12;
    const double xi = fp.x(node);
    auto state_with_x = [&](double target) {
      StateVector s(field->dimension(), Complex(0.0));
      const double amp = std::sqrt(target / (xi * fp.dx()));
      s[2 * node] = amp;
      s[2 * node + 1] = amp;
      return s;
    };
    EnsembleConfig c = small_config(2);
    TrajectoryEnsemble e(field, c, {state_with_x(0.1), state_with_x(0.3)}, {0.0, 0.0});
    CHECK(e.compute_context().averages[0] == doctest::Approx(0.2).epsilon(1e-13));
  }
}

TEST_CASE("gamma = 0 steps never change weights or breed") {
  EnsembleConfig c = small_config(64);
  c.breed_tolerance = 0.5;
  TrajectoryEnsemble e(particle(0.0), c);
  for (int i = 0; i < 200; ++i) {
    const StepReport r = e.step();
    REQUIRE(r.breed.events == 0);
  }
  for (double lw : e.log_weights()) CHECK(lw == 0.0);
}

TEST_CASE("single-path ensemble feeds back its own momentum") {
  TrajectoryEnsemble e(particle(0.5, -1.35), small_config(1), particles_at({{0.7, 0.4}}), {0.0});
  const FeedbackContext ctx = e.compute_context();
  CHECK(ctx.control == doctest::Approx(-1.35 * 0.4).epsilon(1e-15));
  for (const Observable& o : e.model().observables()) {
    if (o.name == "x_mean") CHECK(e.measure(o).value == 0.7);
    if (o.name == "p_mean") CHECK(e.measure(o).value == 0.4);
  }
  e.step();
  CHECK(e.compute_context().averages[0] == e.states()[0][0].real());
}

TEST_CASE("breeding follows the halving rule") {
  const auto model = particle();
  SUBCASE("one negligible path is replaced by the first maximum") {
    EnsembleConfig c = small_config(3);
    c.breed_tolerance = 1e-4;
    TrajectoryEnsemble e(model, c, particles_at({{1, 10}, {2, 20}, {3, 30}}),
                         {0.0, std::log(1e-9), 0.0});
    const BreedReport r = e.breed();
    CHECK(r.events == 1);
    const auto w = e.linear_weights();
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w[2] == 1.0);
    CHECK(e.states()[1] == e.states()[0]);
    CHECK(e.states()[0][0].real() == 1.0);
    CHECK(r.removed_fraction == doctest::Approx(1e-9 / (2.0 + 1e-9)).epsilon(1e-12));
  }
  SUBCASE("no path below tolerance") {
    TrajectoryEnsemble e(model, small_config(2), particles_at({{1, 0}, {2, 0}}), {0.0, 0.0});
    const BreedReport r = e.breed();
    CHECK(r.events == 0);
    CHECK(e.states()[1][0].real() == 2.0);
  }
  SUBCASE("collapsed ensemble") {
    TrajectoryEnsemble e(model, small_config(1), particles_at({{1, 0}}), {-INFINITY});
    CHECK_THROWS_AS(e.breed(), EnsembleCollapsed);
  }
}

TEST_CASE("each breed event respects the weight and observable bounds") {
  const auto model = particle();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> eps_d(1e-4, 0.2);
  std::size_t events = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = size(rng);
    EnsembleConfig c = small_config(static_cast<std::size_t>(m));
    c.breed_tolerance = eps_d(rng);
    std::vector<std::pair<double, double>> xp;
    std::vector<double> lw;
    for (int i = 0; i < m; ++i) {
      xp.push_back({3.0 * u(rng), u(rng)});
      lw.push_back(12.0 * u(rng));
    }
    TrajectoryEnsemble e(model, c, particles_at(xp), lw);
    for (;;) {
      const double before = e.weighted_average(x_of).value;
      double f_max = 0.0;
      for (const auto& s : e.states()) f_max = std::max(f_max, std::abs(s[0].real()));
      const BreedReport r = e.breed(1);
      if (r.events == 0) break;
      ++events;
      const double after = e.weighted_average(x_of).value;
      CHECK(r.removed_fraction < c.breed_tolerance);
      CHECK(std::abs(after - before) <= c.breed_tolerance * (f_max + std::abs(before)));
    }
    CHECK(e.size() == static_cast<std::size_t>(m));
  }
  CHECK(events > 100);
}

TEST_CASE("results do not depend on the worker count") {
  const auto model = particle();
  RunSchedule sched{0.5, 10};
  EnsembleConfig c1 = small_config(257, 1);
  EnsembleConfig c4 = small_config(257, 4);
  c1.check_shared_noise = c4.check_shared_noise = true;
  const ExperimentRecord a = run_experiment(model, c1, sched);
  const ExperimentRecord b = run_experiment(model, c4, sched);
  REQUIRE_FALSE(a.failed);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    for (std::size_t k = 0; k < a.rows[i].values.size(); ++k) {
      CHECK(a.rows[i].values[k].value == b.rows[i].values[k].value);
      CHECK(a.rows[i].values[k].std_err == b.rows[i].values[k].std_err);
    }
  }
  CHECK(a.noise.increments == b.noise.increments);
}

TEST_CASE("every trajectory sees the same real increment") {
  EnsembleConfig c = small_config(100, 3);
  c.check_shared_noise = true;
  TrajectoryEnsemble e(particle(), c);
  for (int i = 0; i < 20; ++i) {
    const auto inc = e.draw_real_increments();
    const StepReport r = e.step(inc);
    CHECK(r.real_hash != 0);
  }
}

TEST_CASE("closed evolution keeps every recorded energy") {
  EnsembleConfig c = small_config(32);
  c.dt = 1e-3;
  const ExperimentRecord r = run_experiment(particle(0.0, 0.0), c, {10.0, 1000});
  REQUIRE_FALSE(r.failed);
  const auto e = r.series("energy");
  for (const auto& v : e) CHECK(std::abs(v.value - e.front().value) < 1e-6);
}

TEST_CASE("noise record round trip and validation") {
  NoiseRecord rec = draw_noise_record(3, 1, 1, 0.01, 17);
  CHECK(rec.steps() == 17);
  std::stringstream ss;
  rec.write(ss);
  const NoiseRecord back = NoiseRecord::read(ss);
  CHECK(back.increments == rec.increments);
  CHECK(back.dt == rec.dt);
  std::stringstream bad("XXXXjunk");
  CHECK_THROWS(NoiseRecord::read(bad));
  std::stringstream ss2;
  rec.write(ss2);
  std::string truncated = ss2.str().substr(0, 40);
  std::stringstream ss3(truncated);
  CHECK_THROWS(NoiseRecord::read(ss3));
}

TEST_CASE("replaying a record reproduces the realization") {
  EnsembleConfig c = small_config(40);
  const RunSchedule sched{1.0, 20};
  const ExperimentRecord a = run_experiment(particle(), c, sched);
  const ExperimentRecord b = run_experiment(particle(), c, sched, &a.noise);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(a.rows[i].values[0].value == b.rows[i].values[0].value);
  NoiseRecord wrong = a.noise;
  wrong.dt = 0.02;
  CHECK_THROWS_AS(run_experiment(particle(), c, sched, &wrong), ConfigError);
}

TEST_CASE("divergence policies") {
  const auto model = particle();
  SUBCASE("abort throws") {
    TrajectoryEnsemble e(model, small_config(2), particles_at({{1, 0}, {NAN, 0}}), {0.0, -1.0});
    CHECK_THROWS(e.step());
  }
  SUBCASE("zero weight drops the path and breeding replaces it") {
    // The field model's amplitude watch flags a blown-up path; it carries a
    // negligible weight so the feedback context stays finite.
    FieldParams fp;
    fp.modes = 16;
    const auto field = std::make_shared<FieldModel>(fp);
    NormalStream rng(1);
    const StateVector good = field->sample_initial(rng);
    StateVector bad = good;
    for (auto& z : bad) z *= 10.0;
    EnsembleConfig c = small_config(2);
    c.on_divergence = DivergencePolicy::ZeroWeight;
    TrajectoryEnsemble e(field, c, {good, bad}, {0.0, -50.0});
    const StepReport r = e.step();
    CHECK(r.diverged == 1);
    CHECK(r.breed.events == 1);
    CHECK(e.divergence_count() == 1);
    CHECK_FALSE(field->diverged(e.states()[1]));
    c.on_divergence = DivergencePolicy::Abort;
    TrajectoryEnsemble f(field, c, {good, bad}, {0.0, -50.0});
    CHECK_THROWS_AS(f.step(), DivergenceError);
  }
}

TEST_CASE("statistics helpers") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i);
  CHECK(pairwise_sum(v) == doctest::Approx(49950.0).epsilon(1e-14));
  const std::vector<double> w{1.0, 1.0, 1.0, 1.0};
  CHECK(effective_sample_size(w) == 4.0);
  const std::vector<double> w2{1.0, 0.0, 0.0};
  CHECK(effective_sample_size(w2) == 1.0);
  const std::vector<double> s{1.0, 3.0};
  const WeightedValue m = mean_and_stderr(s);
  CHECK(m.value == 2.0);
  CHECK(m.std_err == doctest::Approx(1.0));
  CHECK_THROWS_AS(weighted_statistic(std::vector<double>{0.0, 0.0}, {{1.0, 2.0}},
                                     [](std::span<const double> x) { return x[0]; }),
                  EnsembleCollapsed);
}

TEST_CASE("ensemble config validation") {
  EnsembleConfig c;
  c.trajectories = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EnsembleConfig{};
  c.breed_tolerance = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EnsembleConfig{};
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
