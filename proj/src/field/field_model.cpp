#include "wsde/field/field_model.hpp"

#include <fftw3.h>

#include <numbers>

#include "wsde/core/fftw_support.hpp"
#include "wsde/ensemble/errors.hpp"

namespace wsde {

namespace {

constexpr Complex kI{0.0, 1.0};

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Per-thread scratch so that concurrent coefficient evaluations never share
// buffers.  Plans are created unaligned, so any buffer works with them.
struct Scratch {
  std::vector<Complex> buf;
  std::vector<Complex> d1, d2, hphi, hxi;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

struct FieldModel::Transform {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Transform(std::size_t n) {
    std::vector<Complex> tmp(n);
    std::lock_guard lock(fftw_planner_mutex());
    const int m = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward = fftw_plan_dft_1d(m, as_fftw(tmp.data()), as_fftw(tmp.data()), FFTW_FORWARD, flags);
    backward = fftw_plan_dft_1d(m, as_fftw(tmp.data()), as_fftw(tmp.data()), FFTW_BACKWARD, flags);
    if (!forward || !backward) throw std::runtime_error("FFTW planning failed");
  }

  ~Transform() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

void FieldParams::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("field.gamma must be >= 0");
  if (!std::isfinite(k_p)) throw ConfigError("field.k_p must be finite");
  if (modes < 2 || (modes & (modes - 1)) != 0)
    throw ConfigError("field.modes must be a power of two");
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw ConfigError("field.box_length must be positive");
  if (!(particles > 0.0) || !std::isfinite(particles)) throw ConfigError("field.N must be > 0");
  if (!std::isfinite(x0)) throw ConfigError("field.x0 must be finite");
  if (!(amplitude_limit > 1.0)) throw ConfigError("field.amplitude_limit must exceed 1");
}

FieldModel::FieldModel(FieldParams params) : params_(params) {
  params_.validate();
  sqrt_gamma_ = std::sqrt(params_.gamma);
  const std::size_t n = params_.modes;
  x_.resize(n);
  k_.resize(n);
  const double dk = 2.0 * std::numbers::pi / params_.box_length;
  for (std::size_t i = 0; i < n; ++i) {
    x_[i] = params_.x(i);
    // Nyquist bin gets k = -n/2; it carries only roundoff for confined states.
    const auto j = static_cast<double>(i < n / 2 ? static_cast<long>(i)
                                                 : static_cast<long>(i) - static_cast<long>(n));
    k_[i] = j * dk;
  }
  fft_ = std::make_unique<Transform>(n);
}

FieldModel::~FieldModel() = default;

void FieldModel::spectral_derivative(std::span<const Complex> state, std::size_t offset, int order,
                                     std::vector<Complex>& out) const {
  const std::size_t n = params_.modes;
  Scratch& s = scratch();
  s.buf.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.buf[i] = state[2 * i + offset];
  fftw_execute_dft(fft_->forward, as_fftw(s.buf.data()), as_fftw(s.buf.data()));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex f = inv_n;
    for (int o = 0; o < order; ++o) f *= kI * k_[i];
    if (order % 2 == 1 && 2 * i == n) f = 0.0;  // odd derivatives drop the Nyquist bin
    s.buf[i] *= f;
  }
  fftw_execute_dft(fft_->backward, as_fftw(s.buf.data()), as_fftw(s.buf.data()));
  out.assign(s.buf.begin(), s.buf.end());
}

void FieldModel::state_coefficients(std::span<const Complex> state, double /*t*/,
                                    const FeedbackContext& ctx, StateCoefficients& out) const {
  const std::size_t n = params_.modes;
  const double u = ctx.control;
  const double x_bar = ctx.averages[0];
  const double g = params_.gamma;
  Scratch& s = scratch();
  spectral_derivative(state, 0, 2, s.hphi);
  spectral_derivative(state, 1, 2, s.hxi);
  const Complex shift = position(state) - x_bar;
  const std::size_t dim = 2 * n;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_[i];
    const double potential = 0.5 * x * x - u * x;
    const Complex phi = state[2 * i];
    const Complex xi = state[2 * i + 1];
    const Complex h_phi = -0.5 * s.hphi[i] + potential * phi;
    const Complex h_xi = -0.5 * s.hxi[i] + potential * xi;
    const Complex damping = -2.0 * g * x * shift;
    out.drift[2 * i] = -kI * h_phi + damping * phi;
    out.drift[2 * i + 1] = kI * h_xi + damping * xi;

    const double c = sqrt_gamma_ * x;
    out.real_coupling[2 * i] = c * phi;
    out.real_coupling[2 * i + 1] = c * xi;
    out.fict_coupling[2 * i] = kI * c * phi;
    out.fict_coupling[2 * i + 1] = -kI * c * xi;
    out.fict_coupling[dim + 2 * i] = kI * c * phi;
    out.fict_coupling[dim + 2 * i + 1] = kI * c * xi;
  }
}

void FieldModel::weight_coefficients(std::span<const Complex> state, double /*t*/,
                                     const FeedbackContext& ctx, WeightCoefficients& out) const {
  const Complex x = position(state);
  const Complex shift = x - ctx.averages[0];
  out.drift = (-2.0 * params_.gamma * (position_sq(state) + shift * shift)).real();
  out.noise.resize(1);
  out.noise[0] = 2.0 * sqrt_gamma_ * x.real();
}

Complex FieldModel::number(std::span<const Complex> state) const {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < params_.modes; ++i) sum += state[2 * i] * state[2 * i + 1];
  return sum * params_.dx();
}

Complex FieldModel::position(std::span<const Complex> state) const {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < params_.modes; ++i) sum += x_[i] * state[2 * i] * state[2 * i + 1];
  return sum * params_.dx();
}

Complex FieldModel::position_sq(std::span<const Complex> state) const {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < params_.modes; ++i)
    sum += x_[i] * x_[i] * state[2 * i] * state[2 * i + 1];
  return sum * params_.dx();
}

Complex FieldModel::momentum(std::span<const Complex> state) const {
  std::vector<Complex> d1;
  spectral_derivative(state, 0, 1, d1);
  Complex sum = 0.0;
  for (std::size_t i = 0; i < params_.modes; ++i) sum += state[2 * i + 1] * (-kI) * d1[i];
  return sum * params_.dx();
}

Complex FieldModel::momentum_sq(std::span<const Complex> state) const {
  std::vector<Complex> d2;
  spectral_derivative(state, 0, 2, d2);
  Complex sum = 0.0;
  for (std::size_t i = 0; i < params_.modes; ++i) sum -= state[2 * i + 1] * d2[i];
  return sum * params_.dx();
}

Complex FieldModel::energy(std::span<const Complex> state) const {
  return 0.5 * (position_sq(state) + momentum_sq(state));
}

std::vector<Observable> FieldModel::context_observables() const {
  return {Observable::mean("x_mean", [this](auto s) { return position(s).real(); }),
          Observable::mean("p_mean", [this](auto s) { return momentum(s).real(); })};
}

FeedbackContext FieldModel::make_context(std::span<const double> averages) const {
  FeedbackContext ctx;
  ctx.averages.assign(averages.begin(), averages.end());
  ctx.control = params_.k_p * averages[1];
  return ctx;
}

std::vector<Observable> FieldModel::observables() const {
  auto re = [](auto fn) { return [fn](std::span<const Complex> s) { return fn(s).real(); }; };
  auto pos = re([this](auto s) { return position(s); });
  auto pos2 = re([this](auto s) { return position_sq(s); });
  auto mom = re([this](auto s) { return momentum(s); });
  auto mom2 = re([this](auto s) { return momentum_sq(s); });
  auto spread = [](std::string name, PathFunction second, PathFunction first) {
    Observable o;
    o.name = std::move(name);
    o.inputs = {std::move(second), std::move(first)};
    o.combine = [](std::span<const double> m) { return m[0] - m[1] * m[1]; };
    return o;
  };
  return {Observable::mean("energy", re([this](auto s) { return energy(s); })),
          Observable::mean("x_mean", pos),
          Observable::mean("p_mean", mom),
          spread("var_x", pos2, pos),
          spread("var_p", mom2, mom),
          Observable::mean("norm", re([this](auto s) { return number(s); })),
          Observable::mean("im_X", [this](auto s) { return position(s).imag(); })};
}

StateVector FieldModel::sample_initial(NormalStream& /*rng*/) const {
  const std::size_t n = params_.modes;
  StateVector state(2 * n);
  const double amp = std::sqrt(params_.particles) * std::pow(std::numbers::pi, -0.25);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x_[i] - params_.x0;
    const double psi = amp * std::exp(-0.5 * d * d);
    state[2 * i] = psi;
    state[2 * i + 1] = psi;
  }
  return state;
}

bool FieldModel::diverged(std::span<const Complex> state) const {
  double phi2 = 0.0;
  double xi2 = 0.0;
  for (std::size_t i = 0; i < params_.modes; ++i) {
    phi2 += std::norm(state[2 * i]);
    xi2 += std::norm(state[2 * i + 1]);
  }
  const double amplitude = std::sqrt(phi2 * xi2) * params_.dx();
  return !(amplitude <= params_.amplitude_limit * params_.particles);
}

}  // namespace wsde
