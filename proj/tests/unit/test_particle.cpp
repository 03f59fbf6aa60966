#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "wsde/ensemble/ensemble.hpp"
#include "wsde/ensemble/errors.hpp"
#include "wsde/ensemble/experiment.hpp"
#include "wsde/particle/gaussian_filter.hpp"
#include "wsde/particle/particle_model.hpp"

using namespace wsde;

namespace {

FeedbackContext ctx_of(double x_mean, double p_mean, double u) {
  FeedbackContext c;
  c.averages = {x_mean, p_mean};
  c.control = u;
  return c;
}

}  // namespace

TEST_CASE("particle coefficients") {
  SUBCASE("drift at unit displacement") {
    const ParticleModel m({0.0, 0.0, 0.0});
    StateCoefficients c;
    c.resize(2, 1, 1);
    const StateVector s{Complex(1.0), Complex(0.0)};
    m.state_coefficients(s, 0.0, ctx_of(0, 0, 0), c);
    CHECK(c.drift[0] == Complex(0.0));
    CHECK(c.drift[1] == Complex(-1.0));
  }
  SUBCASE("gamma = 0.25 noise couplings") {
    const ParticleModel m({0.25, 0.0, 0.0});
    StateCoefficients c;
    c.resize(2, 1, 1);
    WeightCoefficients w;
    const StateVector s{Complex(0.7), Complex(-0.3)};
    m.state_coefficients(s, 0.0, ctx_of(0, 0, 0), c);
    m.weight_coefficients(s, 0.0, ctx_of(0, 0, 0), w);
    CHECK(c.fict_coupling[0] == Complex(0.0));
    CHECK(c.fict_coupling[1] == Complex(0.5));
    CHECK(c.real_coupling[0] == Complex(0.0));
    CHECK(c.real_coupling[1] == Complex(0.0));
    REQUIRE(w.noise.size() == 1);
    CHECK(w.noise[0] == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("feedback enters as a force") {
    const ParticleModel m({1.0, -1.35, 0.0});
    StateCoefficients c;
    c.resize(2, 1, 1);
    m.state_coefficients(StateVector{Complex(0.5), Complex(0.0)}, 0.0, ctx_of(0, 0.2, -0.27), c);
    CHECK(c.drift[1].real() == doctest::Approx(-(0.5 + 0.27)).epsilon(1e-15));
  }
}

TEST_CASE("weight drift is non-positive and weight noise odd in x") {
  const ParticleModel m({0.8, -1.35, 0.0});
  WeightCoefficients w;
  for (double x = -4.0; x <= 4.0; x += 0.37) {
    for (double xbar : {-1.0, 0.0, 2.5}) {
      m.weight_coefficients(StateVector{Complex(x), Complex(0.1)}, 0.0, ctx_of(xbar, 0, 0), w);
      CHECK(w.drift <= 0.0);
      const double beta_plus = w.noise[0];
      m.weight_coefficients(StateVector{Complex(-x), Complex(0.1)}, 0.0, ctx_of(xbar, 0, 0), w);
      CHECK(w.noise[0] == -beta_plus);
    }
  }
}

TEST_CASE("context is the mean position and momentum") {
  const ParticleModel m({1.0, -1.35, 0.0});
  const auto obs = m.context_observables();
  REQUIRE(obs.size() == 2);
  const double avg[2] = {0.3, 0.5};
  const FeedbackContext c = m.make_context(avg);
  CHECK(c.averages[0] == 0.3);
  CHECK(c.control == doctest::Approx(-0.675).epsilon(1e-15));
}

TEST_CASE("initial Wigner sampling") {
  const std::size_t n = 100000;
  auto moments = [&](double x0) {
    const ParticleModel m({1.0, -1.35, x0});
    NormalStream rng = NormalStream::derive(77, 0);
    double sx = 0, sp = 0, sxx = 0, spp = 0, sxp = 0, se = 0, se2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const StateVector s = m.sample_initial(rng);
      const double x = s[0].real(), p = s[1].real(), e = ParticleModel::energy(s);
      sx += x;
      sp += p;
      sxx += x * x;
      spp += p * p;
      sxp += x * p;
      se += e;
      se2 += e * e;
    }
    const double dn = static_cast<double>(n);
    struct M {
      double x, p, vxx, vpp, vxp, e, e_err;
    };
    const double mx = sx / dn, mp = sp / dn, me = se / dn;
    return M{mx,
             mp,
             sxx / dn - mx * mx,
             spp / dn - mp * mp,
             sxp / dn - mx * mp,
             me,
             std::sqrt((se2 / dn - me * me) / dn)};
  };
  SUBCASE("displaced ground state carries energy 3") {
    const auto m = moments(std::sqrt(5.0));
    CHECK(std::abs(m.e - 3.0) < 4.0 * m.e_err);
    // sd of a sample variance of N(0, 1/2) is sqrt(2/n)/2; of a covariance 1/(2 sqrt n).
    const double sv = std::sqrt(2.0 / n) * 0.5;
    CHECK(std::abs(m.vxx - 0.5) < 4.0 * sv);
    CHECK(std::abs(m.vpp - 0.5) < 4.0 * sv);
    CHECK(std::abs(m.vxp) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("vacuum has zero-point energy") {
    const auto m = moments(0.0);
    CHECK(std::abs(m.e - 0.5) < 4.0 * m.e_err);
  }
}

TEST_CASE("single-path energy") {
  const StateVector s{Complex(1.0), Complex(1.0)};
  CHECK(ParticleModel::energy(s) == 1.0);
}

TEST_CASE("invalid particle parameters are rejected") {
  CHECK_THROWS_AS(ParticleModel({-1.0, 0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(ParticleModel({1.0, NAN, 0.0}), ConfigError);
  CHECK_THROWS_AS(ParticleModel({1.0, 0.0, INFINITY}), ConfigError);
}

TEST_CASE("weighted x-variance stays non-negative during a cooling run") {
  EnsembleConfig c;
  c.trajectories = 500;
  c.dt = 0.005;
  c.seed_real = 4;
  c.seed_fict = 5;
  const ExperimentRecord r =
      run_experiment(std::make_shared<ParticleModel>(ParticleParams{}), c, {4.0, 20});
  REQUIRE_FALSE(r.failed);
  for (const auto& v : r.series("var_x")) CHECK(v.value >= -10.0 * v.std_err);
}

TEST_CASE("filter oracle limits") {
  SUBCASE("closed system keeps the coherent covariance and rotates the mean") {
    const ParticleParams p{0.0, 0.0, 2.0};
    const NoiseRecord rec = draw_noise_record(1, 0, 1, 1e-3, 3000);
    GaussianFilterOptions o;
    o.sample_every = 100;
    const auto m = gaussian_filter_oracle(p, rec, o);
    for (const auto& g : m) {
      CHECK(g.vxx == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(g.vpp == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(std::abs(g.vxp) < 1e-12);
      CHECK(std::abs(g.x - 2.0 * std::cos(g.t)) < 1e-6);
      CHECK(std::abs(g.p + 2.0 * std::sin(g.t)) < 1e-6);
    }
  }
  SUBCASE("measurement contracts the position variance without any noise") {
    NoiseRecord rec;
    rec.n_real = 1;
    rec.dt = 1e-3;
    rec.increments.assign(500, 0.0);
    const auto m = gaussian_filter_oracle({1.0, -1.35, 1.0}, rec);
    CHECK(m.back().vxx < 0.5);
    for (std::size_t i = 1; i < 50; ++i) CHECK(m[i].vxx < m[i - 1].vxx);
  }
  SUBCASE("long-time covariance is the stationary Riccati solution") {
    // Stationary point of the Riccati flow, solved by hand:
    //   4 g Vxp^2 + 2 Vxp - g = 0,  Vxx^2 = Vxp / (2 g),  Vpp = Vxx (1 + 4 g Vxp).
    for (double g : {0.3, 1.0, 2.0}) {
      NoiseRecord rec;
      rec.n_real = 1;
      rec.dt = 2e-3;
      rec.increments.assign(20000, 0.0);
      const auto m = gaussian_filter_oracle({g, -1.35, 0.0}, rec);
      const double vxp = (-2.0 + std::sqrt(4.0 + 16.0 * g * g)) / (8.0 * g);
      const double vxx = std::sqrt(vxp / (2.0 * g));
      const double vpp = vxx * (1.0 + 4.0 * g * vxp);
      CHECK(m.back().vxp == doctest::Approx(vxp).epsilon(1e-6));
      CHECK(m.back().vxx == doctest::Approx(vxx).epsilon(1e-6));
      CHECK(m.back().vpp == doctest::Approx(vpp).epsilon(1e-6));
      // A pure state stays pure: det V = 1/4.
      CHECK(m.back().vxx * m.back().vpp - vxp * vxp == doctest::Approx(0.25).epsilon(1e-6));
    }
  }
  SUBCASE("record mismatches are rejected") {
    NoiseRecord rec;
    rec.n_real = 2;
    rec.dt = 1e-3;
    rec.increments.assign(10, 0.0);
    CHECK_THROWS_AS(gaussian_filter_oracle({}, rec), ConfigError);
    rec.n_real = 1;
    GaussianFilterOptions o;
    o.steps = 11;
    CHECK_THROWS_AS(gaussian_filter_oracle({}, rec, o), ConfigError);
  }
}

TEST_CASE("weighted ensemble tracks the filter oracle over a short window") {
  // Small-scale version of the full comparison: replicate ensembles on one
  // record, compared against the oracle within 4 replicate standard errors.
  const ParticleParams params;
  EnsembleConfig c;
  c.trajectories = 1000;
  c.dt = 0.005;
  c.seed_real = 8;
  const RunSchedule sched{1.0, 40};
  const std::size_t reps = 8;
  std::vector<ExperimentRecord> runs;
  const auto model = std::make_shared<ParticleModel>(params);
  for (std::size_t r = 0; r < reps; ++r) {
    c.seed_fict = 300 + r;
    runs.push_back(run_experiment(model, c, sched));
    REQUIRE_FALSE(runs.back().failed);
  }
  GaussianFilterOptions o;
  o.sample_every = sched.sample_every;
  o.steps = sched.step_count(c.dt);
  const auto oracle = gaussian_filter_oracle(params, runs.front().noise, o);
  REQUIRE(oracle.size() == runs.front().rows.size());
  for (const char* name : {"x_mean", "p_mean", "var_x", "var_p"}) {
    for (std::size_t i = 1; i < oracle.size(); ++i) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(r.series(name)[i].value);
      const WeightedValue m = mean_and_stderr(v);
      const std::string n = name;
      const double ref = n == "x_mean"  ? oracle[i].x
                         : n == "p_mean" ? oracle[i].p
                         : n == "var_x"  ? oracle[i].vxx
                                         : oracle[i].vpp;
      CHECK(std::abs(m.value - ref) < 4.0 * m.std_err);
    }
  }
}
