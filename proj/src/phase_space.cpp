/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "phase_space.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "error.hpp"
#include "fft.hpp"

namespace vrom {

void ParamPoint::validate() const {
  if (!(T > 0.0) || !(v0 > 0.0) || !(alpha >= 0.0) || !std::isfinite(T) || !std::isfinite(alpha) ||
      !std::isfinite(v0)) {
    fail(ErrorCode::Config, "invalid parameter point (T=" + std::to_string(T) + ", alpha=" +
                                std::to_string(alpha) + ", v0=" + std::to_string(v0) + ")");
  }
}

PhaseGrid build_grid(std::size_t nx, std::size_t nv, double v0) {
  if (nx < 8 || nv < 8) {
    fail(ErrorCode::Config, "grid needs nx, nv >= 8 (got " + std::to_string(nx) + " x " +
                                std::to_string(nv) + ")");
  }
  if (!(v0 > 0.0)) fail(ErrorCode::Config, "v0 must be positive");
  PhaseGrid g;
  g.nx = nx;
  g.nv = nv;
  g.x_min = 0.0;
  g.x_max = 2.0 * std::numbers::pi;
  g.v_max = 3.5 * v0;
  g.v_min = -g.v_max;
  g.dx = (g.x_max - g.x_min) / static_cast<double>(nx);
  g.dv = (g.v_max - g.v_min) / static_cast<double>(nv - 1);
  return g;
}

Eigen::VectorXd velocity_moment(const PhaseGrid& grid, std::span<const double> f) {
  if (f.size() != grid.size()) fail(ErrorCode::Config, "velocity_moment: field size does not match grid");
  Eigen::VectorXd rho(static_cast<Eigen::Index>(grid.nx));
  const std::size_t nv = grid.nv;
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    const double* col = f.data() + ix * nv;
    double s = 0.5 * (col[0] + col[nv - 1]);
    for (std::size_t iv = 1; iv + 1 < nv; ++iv) s += col[iv];
    rho[static_cast<Eigen::Index>(ix)] = s * grid.dv;
  }
  return rho;
}

Eigen::VectorXd velocity_moment(const DistributionField& f) {
  return velocity_moment(f.grid, std::span<const double>(f.values.data(), f.values.size()));
}

namespace {

// out = IFFT(multiplier(k) * FFT(in)); multiplier receives the angular wavenumber and mode index.
template <class Multiplier>
Eigen::VectorXd spectral_apply(std::span<const double> in, double length, Multiplier&& mult) {
  const detail::RealFft fft(in.size());
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(in, spec);
  const double base = 2.0 * std::numbers::pi / length;
  const double norm = 1.0 / static_cast<double>(in.size());
  for (std::size_t m = 0; m < spec.size(); ++m) {
    spec[m] *= mult(base * static_cast<double>(m), m) * norm;
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(in.size()));
  fft.backward(spec, std::span<double>(out.data(), in.size()));
  return out;
}

}  // namespace

PotentialField poisson_solve(std::span<const double> rho, double length) {
  // Mean removal is implicit: the k = 0 coefficient of phi is set to zero.
  return {spectral_apply(rho, length, [](double k, std::size_t m) -> std::complex<double> {
    if (m == 0) return 0.0;
    return -1.0 / (k * k);
  })};
}

PotentialField electric_field(std::span<const double> phi, double length) {
  const std::size_t nyquist = phi.size() / 2;
  return {spectral_apply(phi, length, [nyquist](double k, std::size_t m) -> std::complex<double> {
    if (m == nyquist) return 0.0;
    return {0.0, -k};
  })};
}

Eigen::VectorXd spectral_laplacian(std::span<const double> u, double length) {
  return spectral_apply(u, length, [](double k, std::size_t) -> std::complex<double> { return -k * k; });
}

void StencilMatrix::apply(std::span<const double> in, std::span<double> out) const {
  apply_strided(in.data(), out.data(), 1);
}

void StencilMatrix::apply_strided(const double* in, double* out, std::size_t stride) const {
  const auto ni = static_cast<long>(n);
  const auto width = static_cast<long>(weights.size());
  for (long i = 0; i < ni; ++i) {
    double s = 0.0;
    for (long w = 0; w < width; ++w) {
      long j = i + first_offset + w;
      if (periodic) {
        j = ((j % ni) + ni) % ni;
      } else if (j < 0 || j >= ni) {
        continue;
      }
      s += weights[static_cast<std::size_t>(w)] * in[static_cast<std::size_t>(j) * stride];
    }
    out[static_cast<std::size_t>(i) * stride] = s;
  }
}

Eigen::MatrixXd StencilMatrix::to_dense() const {
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ni, ni);
  for (long i = 0; i < static_cast<long>(n); ++i) {
    for (long w = 0; w < static_cast<long>(weights.size()); ++w) {
      long j = i + first_offset + w;
      if (periodic) {
        j = ((j % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n);
      } else if (j < 0 || j >= static_cast<long>(n)) {
        continue;
      }
      m(i, j) += weights[static_cast<std::size_t>(w)];
    }
  }
  return m;
}

LinearDerivatives linear_derivative_matrices(const PhaseGrid& grid) {
  if (grid.nx < 6 || grid.nv < 7) fail(ErrorCode::Config, "grid smaller than derivative stencil width");
  auto scaled = [](std::vector<double> w, double h) {
    for (auto& c : w) c /= h;
    return w;
  };
  LinearDerivatives d;
  // Flux difference of the WENO5 linear-weight (optimal) reconstruction.
  d.dx_up = {grid.nx, true, -3,
             scaled({-2.0 / 60, 15.0 / 60, -60.0 / 60, 20.0 / 60, 30.0 / 60, -3.0 / 60}, grid.dx)};
  d.dx_down = {grid.nx, true, -2,
               scaled({3.0 / 60, -30.0 / 60, -20.0 / 60, 60.0 / 60, -15.0 / 60, 2.0 / 60}, grid.dx)};
  d.dv_central = {grid.nv, false, -3,
                  scaled({-1.0 / 60, 9.0 / 60, -45.0 / 60, 0.0, 45.0 / 60, -9.0 / 60, 1.0 / 60}, grid.dv)};
  return d;
}

Eigen::VectorXd apply_kronecker(const PhaseGrid& grid, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                const Eigen::VectorXd& f) {
  const auto nx = static_cast<Eigen::Index>(grid.nx);
  const auto nv = static_cast<Eigen::Index>(grid.nv);
  // Row-major nx x nv view of the x-major flat vector.
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> F(f.data(), nx, nv);
  RowMat out = a * F * b.transpose();
  return Eigen::Map<const Eigen::VectorXd>(out.data(), nx * nv);
}

}  // namespace vrom
