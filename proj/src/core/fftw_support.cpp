#include "wsde/core/fftw_support.hpp"

namespace wsde {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace wsde
