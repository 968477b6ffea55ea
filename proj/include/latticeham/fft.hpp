#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "latticeham/error.hpp"

namespace latticeham::fft {

/// FFTW planning is not thread-safe; every plan create/destroy goes through this lock.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

enum class Direction : int { Forward = FFTW_FORWARD, Backward = FFTW_BACKWARD };

/// Unnormalized in-place DFT over the lattice `dims` (first level slowest) of
/// `howmany` interleaved series: element e at lattice point c is
/// data[c * howmany + e]. Forward uses exp(-2 pi i j k / L).
inline void transform(std::vector<std::complex<double>>& data, const std::vector<int>& dims,
                      int howmany, Direction dir) {
  long points = 1;
  for (int n : dims) points *= n;
  if (static_cast<long>(data.size()) != points * howmany)
    throw DimensionError("fft::transform: buffer length does not match dims * howmany");
  if (points == 1 || howmany == 0) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_many_dft(static_cast<int>(dims.size()), dims.data(), howmany, buf, nullptr,
                              howmany, 1, buf, nullptr, howmany, 1, static_cast<int>(dir),
                              FFTW_ESTIMATE);
  }
  if (!plan) throw NumericalError("fft::transform: FFTW planner failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace latticeham::fft
