/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "fft.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

#include "error.hpp"

namespace vrom::detail {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// Plans live for the whole process; FFTW planning is not thread-safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  const int len = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  // ESTIMATE keeps the chosen algorithm (and thus the bits) independent of timing.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT;
  PlanPair p{fftw_plan_dft_r2c_1d(len, real, spec, flags),
             fftw_plan_dft_c2r_1d(len, spec, real, FFTW_ESTIMATE | FFTW_UNALIGNED)};
  fftw_free(real);
  fftw_free(spec);
  if (!p.forward || !p.backward) fail(ErrorCode::Config, "FFT planning failed for size " + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 4 || n % 2 != 0) {
    fail(ErrorCode::Config, "FFT length must be even and >= 4, got " + std::to_string(n));
  }
  auto p = plans_for(n);
  forward_plan_ = p.forward;
  backward_plan_ = p.backward;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::backward(std::span<const std::complex<double>> in, std::span<double> out) const {
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

}  // namespace vrom::detail
