#include "wsde/core/model.hpp"

#include <cmath>

namespace wsde {

NoiseSpec::NoiseSpec(std::size_t real, std::size_t fict, double step)
    : n_real(real), n_fict(fict), dt(step) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("NoiseSpec: dt must be positive");
}

void StateCoefficients::resize(std::size_t n, std::size_t n_real, std::size_t n_fict) {
  drift.resize(n);
  real_coupling.resize(n * n_real);
  fict_coupling.resize(n * n_fict);
}

Observable Observable::mean(std::string name, PathFunction f) {
  return {std::move(name), {std::move(f)}, [](std::span<const double> m) { return m[0]; }};
}

Observable Observable::variance(std::string name, PathFunction f) {
  auto sq = [f](std::span<const Complex> s) {
    const double v = f(s);
    return v * v;
  };
  return {std::move(name), {std::move(f), std::move(sq)},
          [](std::span<const double> m) { return m[1] - m[0] * m[0]; }};
}

}  // namespace wsde
