#include "wsde/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace wsde {

namespace {

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

NormalStream::NormalStream(std::seed_seq& seq) : engine_(seq) {}

NormalStream NormalStream::derive(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{lo32(master), hi32(master), lo32(a), hi32(a), lo32(b), hi32(b)};
  return NormalStream(seq);
}

// (0, 1], never zero so log() is safe.
double NormalStream::uniform_open() {
  ++words_;
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

void NormalStream::fill(std::span<double> out, double scale) {
  std::size_t i = 0;
  while (i < out.size()) {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1)) * scale;
    const double theta = 2.0 * std::numbers::pi * u2;
    out[i++] = r * std::cos(theta);
    if (i < out.size()) out[i++] = r * std::sin(theta);
  }
}

double NormalStream::next() {
  double v = 0.0;
  fill(std::span<double>(&v, 1));
  return v;
}

}  // namespace wsde
