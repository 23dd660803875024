/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vrom::detail {

/// Real-to-complex transforms of length n backed by FFTW. Plans are created
/// once per size under a lock; execution uses the thread-safe new-array API.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t spectrum_size() const { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse; divide by size() to invert forward().
  void backward(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* backward_plan_;
};

}  // namespace vrom::detail
