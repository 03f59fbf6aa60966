#include "wsde/grid/wigner_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "wsde/core/fftw_support.hpp"
#include "wsde/ensemble/errors.hpp"
#include "wsde/ensemble/stats.hpp"

namespace wsde {

namespace {

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwDeleter> fftw_array(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwDeleter>(p);
}

double wavenumber(std::size_t k, std::size_t n, double spacing) {
  return 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * spacing);
}

// Multiplies a half-spectrum bin by exp(i phase), keeping the Nyquist bin real.
void rotate(fftw_complex& c, double phase, bool nyquist, double damping = 1.0) {
  if (nyquist) {
    const double f = std::cos(phase) * damping;
    c[0] *= f;
    c[1] *= f;
    return;
  }
  const double cr = std::cos(phase) * damping;
  const double ci = std::sin(phase) * damping;
  const double re = c[0] * cr - c[1] * ci;
  const double im = c[0] * ci + c[1] * cr;
  c[0] = re;
  c[1] = im;
}

}  // namespace

void GridSpec::validate() const {
  if (n_x < 4 || n_p < 4 || n_x % 2 != 0 || n_p % 2 != 0)
    throw ConfigError("grid sizes must be even and at least 4");
  if (!(l_x > 0.0) || !(l_p > 0.0) || !std::isfinite(l_x) || !std::isfinite(l_p))
    throw ConfigError("grid extents must be positive");
}

PhaseSpaceGrid::PhaseSpaceGrid(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.n_x * spec_.n_p)
    throw std::invalid_argument("grid value count does not match the grid spec");
  const double n = renormalize();
  if (!(n != 0.0) || !std::isfinite(n)) throw std::invalid_argument("grid has no finite norm");
}

PhaseSpaceGrid PhaseSpaceGrid::gaussian(const GridSpec& spec, double x0, double p0, double var_x,
                                        double var_p) {
  spec.validate();
  if (!(var_x > 0.0) || !(var_p > 0.0)) throw ConfigError("gaussian variances must be positive");
  std::vector<double> v(spec.n_x * spec.n_p);
  for (std::size_t j = 0; j < spec.n_p; ++j) {
    const double dp = spec.p(j) - p0;
    for (std::size_t i = 0; i < spec.n_x; ++i) {
      const double dx = spec.x(i) - x0;
      v[j * spec.n_x + i] = std::exp(-0.5 * (dx * dx / var_x + dp * dp / var_p));
    }
  }
  const double peak = *std::max_element(v.begin(), v.end());
  double edge = 0.0;
  for (std::size_t i = 0; i < spec.n_x; ++i) edge = std::max(edge, v[i]);
  for (std::size_t j = 0; j < spec.n_p; ++j) edge = std::max(edge, v[j * spec.n_x]);
  // Half-open periodic box: the last row and column are also boundary nodes.
  for (std::size_t i = 0; i < spec.n_x; ++i) edge = std::max(edge, v[(spec.n_p - 1) * spec.n_x + i]);
  for (std::size_t j = 0; j < spec.n_p; ++j) edge = std::max(edge, v[j * spec.n_x + spec.n_x - 1]);
  if (!(peak > 0.0) || edge > 1e-12 * peak) throw ConfigError("grid too small");
  return PhaseSpaceGrid(spec, std::move(v));
}

double PhaseSpaceGrid::norm() const {
  return pairwise_sum(values_) * spec_.dx() * spec_.dp();
}

double PhaseSpaceGrid::renormalize() {
  const double n = norm();
  if (n != 0.0 && std::isfinite(n)) {
    const double s = 1.0 / n;
    for (double& w : values_) w *= s;
  }
  return n;
}

GridMoments PhaseSpaceGrid::moments() const {
  const std::size_t nx = spec_.n_x;
  const std::size_t np = spec_.n_p;
  std::vector<double> mx(nx, 0.0);  // marginal over p
  std::vector<double> mp(np, 0.0);  // marginal over x
  for (std::size_t j = 0; j < np; ++j) {
    const auto row = std::span<const double>(values_).subspan(j * nx, nx);
    mp[j] = pairwise_sum(row);
    for (std::size_t i = 0; i < nx; ++i) mx[i] += row[i];
  }
  std::vector<double> tmp(std::max(nx, np));
  auto moment = [&](const std::vector<double>& marg, auto coord, std::size_t n, double c, int k) {
    for (std::size_t i = 0; i < n; ++i) tmp[i] = marg[i] * std::pow(coord(i) - c, k);
    return pairwise_sum(std::span<const double>(tmp.data(), n));
  };
  auto xs = [&](std::size_t i) { return spec_.x(i); };
  auto ps = [&](std::size_t j) { return spec_.p(j); };
  const double z = pairwise_sum(values_);
  GridMoments m;
  m.x = moment(mx, xs, nx, 0.0, 1) / z;
  m.p = moment(mp, ps, np, 0.0, 1) / z;
  m.vxx = moment(mx, xs, nx, m.x, 2) / z;
  m.vpp = moment(mp, ps, np, m.p, 2) / z;
  m.energy = 0.5 * (m.vxx + m.x * m.x + m.vpp + m.p * m.p);
  return m;
}

struct WignerGridSolver::Plans {
  std::size_t nx, np, hx, hp;
  std::unique_ptr<double[], FftwDeleter> real;
  std::unique_ptr<fftw_complex[], FftwDeleter> spec_x;  // [ip][kx], kx < hx
  std::unique_ptr<fftw_complex[], FftwDeleter> spec_p;  // [kp][ix], kp < hp
  fftw_plan fwd_x = nullptr, inv_x = nullptr, fwd_p = nullptr, inv_p = nullptr;

  Plans(std::size_t nx_, std::size_t np_)
      : nx(nx_), np(np_), hx(nx_ / 2 + 1), hp(np_ / 2 + 1),
        real(fftw_array<double>(nx_ * np_)),
        spec_x(fftw_array<fftw_complex>(hx * np_)),
        spec_p(fftw_array<fftw_complex>(hp * nx_)) {
    std::lock_guard lock(fftw_planner_mutex());
    const int n_x = static_cast<int>(nx), n_p = static_cast<int>(np);
    const int h_x = static_cast<int>(hx);
    // Rows along x: contiguous, one transform per p node.
    fwd_x = fftw_plan_many_dft_r2c(1, &n_x, n_p, real.get(), nullptr, 1, n_x, spec_x.get(),
                                   nullptr, 1, h_x, FFTW_ESTIMATE);
    inv_x = fftw_plan_many_dft_c2r(1, &n_x, n_p, spec_x.get(), nullptr, 1, h_x, real.get(),
                                   nullptr, 1, n_x, FFTW_ESTIMATE);
    // Columns along p: stride n_x, one transform per x node.
    fwd_p = fftw_plan_many_dft_r2c(1, &n_p, n_x, real.get(), nullptr, n_x, 1, spec_p.get(),
                                   nullptr, n_x, 1, FFTW_ESTIMATE);
    inv_p = fftw_plan_many_dft_c2r(1, &n_p, n_x, spec_p.get(), nullptr, n_x, 1, real.get(),
                                   nullptr, n_x, 1, FFTW_ESTIMATE);
    if (!fwd_x || !inv_x || !fwd_p || !inv_p) throw std::runtime_error("FFTW planning failed");
  }

  ~Plans() {
    std::lock_guard lock(fftw_planner_mutex());
    for (fftw_plan p : {fwd_x, inv_x, fwd_p, inv_p})
      if (p) fftw_destroy_plan(p);
  }
};

WignerGridSolver::WignerGridSolver(ParticleParams params, PhaseSpaceGrid initial,
                                   GridSolverOptions options)
    : params_(params), grid_(std::move(initial)), options_(options),
      plans_(std::make_unique<Plans>(grid_.spec().n_x, grid_.spec().n_p)) {
  params_.validate();
}

WignerGridSolver::~WignerGridSolver() = default;

// W(x, p) <- W(x - p tau, p)
void WignerGridSolver::shear_x(double tau) {
  Plans& P = *plans_;
  const GridSpec& s = grid_.spec();
  auto vals = grid_.values();
  std::copy(vals.begin(), vals.end(), P.real.get());
  fftw_execute(P.fwd_x);
  const double inv_n = 1.0 / static_cast<double>(P.nx);
  for (std::size_t j = 0; j < P.np; ++j) {
    const double shift = s.p(j) * tau;
    for (std::size_t k = 0; k < P.hx; ++k) {
      fftw_complex& c = P.spec_x[j * P.hx + k];
      rotate(c, -wavenumber(k, P.nx, s.dx()) * shift, 2 * k == P.nx, inv_n);
    }
  }
  fftw_execute(P.inv_x);
  std::copy(P.real.get(), P.real.get() + vals.size(), vals.begin());
}

// W(x, p) <- W(x, p + (x - u) tau), then exact diffusion (g/2) d_p^2 over tau.
void WignerGridSolver::shear_p_and_diffuse(double tau, double u) {
  Plans& P = *plans_;
  const GridSpec& s = grid_.spec();
  auto vals = grid_.values();
  std::copy(vals.begin(), vals.end(), P.real.get());
  fftw_execute(P.fwd_p);
  const double inv_n = 1.0 / static_cast<double>(P.np);
  const double shear = options_.advection ? tau : 0.0;
  const double diff = options_.diffusion ? 0.5 * params_.gamma * tau : 0.0;
  for (std::size_t k = 0; k < P.hp; ++k) {
    const double kp = wavenumber(k, P.np, s.dp());
    const double damping = std::exp(-diff * kp * kp) * inv_n;
    for (std::size_t i = 0; i < P.nx; ++i) {
      fftw_complex& c = P.spec_p[k * P.nx + i];
      rotate(c, kp * (s.x(i) - u) * shear, 2 * k == P.np, damping);
    }
  }
  fftw_execute(P.inv_p);
  std::copy(P.real.get(), P.real.get() + vals.size(), vals.begin());
}

void WignerGridSolver::advect_diffuse(double tau, double u) {
  if (options_.advection) shear_x(0.5 * tau);
  if (options_.advection || options_.diffusion) shear_p_and_diffuse(tau, u);
  if (options_.advection) shear_x(0.5 * tau);
}

void WignerGridSolver::condition(double dt, double dw) {
  const GridMoments m = grid_.moments();
  const GridSpec& s = grid_.spec();
  const double g = params_.gamma;
  const double gain = 2.0 * std::sqrt(g);
  std::vector<double> factor(s.n_x);
  for (std::size_t i = 0; i < s.n_x; ++i) {
    const double d = s.x(i) - m.x;
    factor[i] = std::exp(-2.0 * g * (d * d - m.vxx) * dt + gain * d * dw);
  }
  auto vals = grid_.values();
  for (std::size_t j = 0; j < s.n_p; ++j)
    for (std::size_t i = 0; i < s.n_x; ++i) vals[j * s.n_x + i] *= factor[i];
  const double before = grid_.renormalize();
  last_norm_drift_ = std::abs(before - 1.0);
  if (!std::isfinite(before) || last_norm_drift_ > 0.1) throw std::runtime_error("step too large");
}

void WignerGridSolver::step(double dt, double dw, double u) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  advect_diffuse(0.5 * dt, u);
  if (options_.conditioning) condition(dt, dw);
  advect_diffuse(0.5 * dt, u);
  grid_.renormalize();
}

ExperimentRecord run_grid_experiment(const ParticleParams& params, const GridSpec& spec,
                                     const NoiseRecord& record, const RunSchedule& schedule) {
  if (record.n_real != 1) throw ConfigError("grid solver needs a noise record with n_real = 1");
  const double dt = record.dt;
  const std::size_t steps = schedule.step_count(dt);
  if (steps > record.steps()) throw ConfigError("noise record is shorter than the requested run");
  const std::size_t every = schedule.sample_every == 0 ? 1 : schedule.sample_every;

  WignerGridSolver solver(params, PhaseSpaceGrid::gaussian(spec, params.x0, 0.0, 0.5, 0.5));

  ExperimentRecord rec;
  rec.model = "grid";
  rec.observable_names = {"energy", "x_mean", "p_mean", "var_x", "var_p"};
  rec.noise = record;
  rec.noise.increments.resize(steps);

  auto sample = [&](std::size_t step) {
    const GridMoments m = solver.grid().moments();
    SampleRow row;
    row.t = static_cast<double>(step) * dt;
    row.values = {{m.energy, 0.0}, {m.x, 0.0}, {m.p, 0.0}, {m.vxx, 0.0}, {m.vpp, 0.0}};
    row.ess = 1.0;
    rec.rows.push_back(std::move(row));
  };
  sample(0);
  try {
    for (std::size_t s = 0; s < steps; ++s) {
      const double u = params.k_p * solver.grid().moments().p;
      solver.step(dt, record.increments[s], u);
      if ((s + 1) % every == 0 || s + 1 == steps) sample(s + 1);
    }
  } catch (const std::runtime_error& e) {
    rec.failed = true;
    rec.diagnostic = e.what();
  }
  return rec;
}

}  // namespace wsde
