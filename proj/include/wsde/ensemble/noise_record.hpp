#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace wsde {

/// Recorded real-noise increments of one realization.
///
/// On disk (all little-endian):
///   char[4]  magic "WSDE"
///   u32      version (1)
///   u32      n_real
///   u64      step count
///   f64      dt
///   f64      increments[step count * n_real], step-major
struct NoiseRecord {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t n_real = 0;
  double dt = 0.0;
  std::vector<double> increments;

  std::uint64_t steps() const { return n_real == 0 ? 0 : increments.size() / n_real; }
  std::span<const double> step(std::uint64_t index) const {
    return std::span<const double>(increments).subspan(index * n_real, n_real);
  }

  void write(std::ostream& os) const;
  static NoiseRecord read(std::istream& is);

  void save(const std::filesystem::path& path) const;
  static NoiseRecord load(const std::filesystem::path& path);
};

}  // namespace wsde
