#pragma once

#include <stdexcept>
#include <string>

namespace wsde {

/// Every weight is zero (or the only path fell below tolerance).
class EnsembleCollapsed : public std::runtime_error {
 public:
  EnsembleCollapsed() : std::runtime_error("ensemble collapsed") {}
};

/// A trajectory produced a non-finite state or weight under the abort policy.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wsde
