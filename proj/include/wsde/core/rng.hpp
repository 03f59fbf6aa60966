#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace wsde {

/// Mersenne-twister stream producing standard normal deviates by the
/// Box-Muller transform.  Every call to fill() consumes exactly
/// 2 * ceil(n / 2) engine words, so the stream position after a call depends
/// only on how many values were requested.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);

  /// Independent stream for (master, a, b), derived through std::seed_seq so
  /// that sibling indices never share engine state.
  static NormalStream derive(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

  /// Fills `out` with i.i.d. N(0, scale^2) values.
  void fill(std::span<double> out, double scale = 1.0);

  double next();

  std::uint64_t words_consumed() const { return words_; }

 private:
  explicit NormalStream(std::seed_seq& seq);
  double uniform_open();

  std::mt19937_64 engine_;
  std::uint64_t words_ = 0;
};

}  // namespace wsde
