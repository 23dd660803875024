/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vrom {

/*! Uniform Cartesian (x,v) grid.
 *
 *  x is periodic with nx cells and no duplicated endpoint, v carries nv nodes
 *  including both Dirichlet endpoints. A phase-space vector is flattened
 *  x-major: flat(ix, iv) = ix * nv + iv, so a Kronecker operator A (x) B
 *  applies A along x and B along v.
 */
struct PhaseGrid {
  std::size_t nx = 0;
  std::size_t nv = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double dx = 0.0;
  double dv = 0.0;

  std::size_t size() const { return nx * nv; }
  std::size_t flat(std::size_t ix, std::size_t iv) const { return ix * nv + iv; }
  double x(std::size_t ix) const { return x_min + static_cast<double>(ix) * dx; }
  double v(std::size_t iv) const { return v_min + static_cast<double>(iv) * dv; }
  double length() const { return x_max - x_min; }

  bool operator==(const PhaseGrid&) const = default;
};

/// One point mu = (T, alpha, v0) of the parameter domain; k = 1 and L = 2*pi are fixed.
struct ParamPoint {
  double T = 0.0;
  double alpha = 0.0;
  double v0 = 1.0;

  void validate() const;
  bool operator==(const ParamPoint&) const = default;
};

struct DistributionField {
  PhaseGrid grid;
  Eigen::VectorXd values;
  double time = 0.0;

  double at(std::size_t ix, std::size_t iv) const { return values[static_cast<Eigen::Index>(grid.flat(ix, iv))]; }
  bool all_finite() const { return values.allFinite(); }
};

/// phi(x) or E(x) sampled at the nx periodic x nodes.
struct PotentialField {
  Eigen::VectorXd values;
};

PhaseGrid build_grid(std::size_t nx, std::size_t nv, double v0);

/// Trapezoidal integral over v of every x column; returns nx values.
Eigen::VectorXd velocity_moment(const PhaseGrid& grid, std::span<const double> f);
Eigen::VectorXd velocity_moment(const DistributionField& f);

/// Solves d2phi/dx2 = rho - mean(rho) spectrally; the k = 0 mode of phi is pinned to zero.
PotentialField poisson_solve(std::span<const double> rho, double length);

/// E = -dphi/dx by spectral differentiation (Nyquist mode dropped).
PotentialField electric_field(std::span<const double> phi, double length);

/// Spectral second derivative, consistent with poisson_solve.
Eigen::VectorXd spectral_laplacian(std::span<const double> u, double length);

/*! Banded first-derivative matrix given by a constant stencil.
 *
 *  Row i reads entries i + first_offset ... i + first_offset + weights.size() - 1.
 *  Periodic matrices wrap around; non-periodic ones treat out-of-range entries
 *  as zero ghosts (homogeneous Dirichlet).
 */
struct StencilMatrix {
  std::size_t n = 0;
  bool periodic = false;
  int first_offset = 0;
  std::vector<double> weights;  // already divided by the grid spacing

  void apply(std::span<const double> in, std::span<double> out) const;
  /// Strided variant: reads/writes element i at base[i * stride].
  void apply_strided(const double* in, double* out, std::size_t stride) const;
  Eigen::MatrixXd to_dense() const;
};

struct LinearDerivatives {
  StencilMatrix dx_up;       ///< fifth-order, left-biased (wind > 0)
  StencilMatrix dx_down;     ///< fifth-order, right-biased (wind < 0)
  StencilMatrix dv_central;  ///< sixth-order central with zero ghosts
};

LinearDerivatives linear_derivative_matrices(const PhaseGrid& grid);

/// Applies (A (x) B) to a flat x-major vector; A acts along x, B along v.
Eigen::VectorXd apply_kronecker(const PhaseGrid& grid, const Eigen::MatrixXd& a,
                                const Eigen::MatrixXd& b, const Eigen::VectorXd& f);

}  // namespace vrom
