#pragma once

#include <mutex>

namespace wsde {

/// FFTW's planner is not thread-safe; every plan creation and destruction in
/// the library holds this lock.  Executing existing plans needs no lock.
std::mutex& fftw_planner_mutex();

}  // namespace wsde
