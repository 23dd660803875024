/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "phase_space.hpp"
#include "snapshots.hpp"

namespace vrom {

struct TruncationRule {
  enum class Mode { FixedCount, EnergyFraction, SingularValueRatio };
  Mode mode = Mode::EnergyFraction;
  std::size_t n_fixed = 0;  ///< count for FixedCount; optional cap (0 = none) for SingularValueRatio
  double energy = 0.9999;
  double ratio = 0.0;       ///< keep sigma_i >= ratio * sigma_1

  static TruncationRule fixed(std::size_t n) { return {Mode::FixedCount, n, 0.0, 0.0}; }
  static TruncationRule energy_fraction(double e) { return {Mode::EnergyFraction, 0, e, 0.0}; }
  static TruncationRule sv_ratio(double r, std::size_t cap = 0) { return {Mode::SingularValueRatio, cap, 0.0, r}; }
  void validate() const;
};

struct PodResult {
  Eigen::MatrixXd basis;                  ///< first n left singular vectors
  Eigen::VectorXd singular_values;        ///< every singular value, nonincreasing
  std::size_t n = 0;
};

/*! POD of a snapshot matrix.
 *
 *  Thin SVD computed on the short dimension (Householder QR of U, then SVD of
 *  the small triangular factor). Singular values below max(rows, cols) * eps
 *  relative to the largest are treated as zero and never retained. Each basis
 *  vector is signed so its largest-magnitude entry is nonnegative.
 */
PodResult pod_basis(const Eigen::MatrixXd& u, const TruncationRule& rule);

struct WindowBasis {
  std::size_t window_index = 0;
  Eigen::MatrixXd phi_f;    ///< N_f x n_f
  Eigen::MatrixXd phi_phi;  ///< nx x n_phi
  Eigen::MatrixXd phi_e;    ///< nx x n_phi, -d/dx of phi_phi columns
  Eigen::VectorXd sv_f;
  Eigen::VectorXd sv_phi;

  std::size_t n_f() const { return static_cast<std::size_t>(phi_f.cols()); }
  std::size_t n_phi() const { return static_cast<std::size_t>(phi_phi.cols()); }
};

/// Electric-field basis: spectral -d/dx of every potential basis column.
Eigen::MatrixXd electric_field_basis(const PhaseGrid& grid, const Eigen::MatrixXd& phi_phi);

WindowBasis build_window_basis(std::size_t window_index, const SnapshotMatrices& snapshots, const PhaseGrid& grid,
                               const TruncationRule& rule_f, const TruncationRule& rule_phi);

/// Assembles each group lazily and builds its basis; memory holds one window's snapshots at a time.
std::vector<WindowBasis> build_window_bases(const std::vector<SnapshotGroup>& groups,
                                            const std::vector<TrajectorySource*>& runs,
                                            const TruncationRule& rule_f, const TruncationRule& rule_phi);

/// max |Phi^T Phi - I|.
double orthonormality_defect(const Eigen::MatrixXd& phi);

}  // namespace vrom
