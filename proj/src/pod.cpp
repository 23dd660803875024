/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "pod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace vrom {

void TruncationRule::validate() const {
  if (mode == Mode::EnergyFraction && !(energy > 0.0 && energy <= 1.0)) {
    fail(ErrorCode::Config, "energy fraction must lie in (0, 1], got " + std::to_string(energy));
  }
  if (mode == Mode::SingularValueRatio && !(ratio > 0.0 && ratio < 1.0)) {
    fail(ErrorCode::Config, "singular value ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
}

namespace {

void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0.0) basis.col(c) *= -1.0;
  }
}

struct ThinSvd {
  Eigen::MatrixXd left;
  Eigen::VectorXd values;
};

ThinSvd thin_svd(const Eigen::MatrixXd& u) {
  ThinSvd out;
  if (u.rows() >= u.cols()) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
    const Eigen::Index m = u.cols();
    Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(u.rows(), m);
    out.left = q * svd.matrixU();
    out.values = svd.singularValues();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(u, Eigen::ComputeThinU);
    out.left = svd.matrixU();
    out.values = svd.singularValues();
  }
  return out;
}

}  // namespace

PodResult pod_basis(const Eigen::MatrixXd& u, const TruncationRule& rule) {
  rule.validate();
  PodResult res;
  if (rule.mode == TruncationRule::Mode::FixedCount && rule.n_fixed == 0) {
    res.basis.resize(u.rows(), 0);
    return res;
  }
  if (u.size() == 0) fail(ErrorCode::NoBasis, "empty snapshot matrix");
  if (!u.allFinite()) fail(ErrorCode::Config, "snapshot matrix has non-finite entries");
  if (u.cwiseAbs().maxCoeff() == 0.0) fail(ErrorCode::NoBasis, "snapshot matrix is identically zero");

  ThinSvd svd = thin_svd(u);
  res.singular_values = svd.values;
  const Eigen::VectorXd& s = svd.values;
  const double tol = static_cast<double>(std::max(u.rows(), u.cols())) * std::numeric_limits<double>::epsilon() * s[0];
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(s.size()) && s[static_cast<Eigen::Index>(rank)] > tol) ++rank;

  std::size_t n = rank;
  if (rule.mode == TruncationRule::Mode::FixedCount) {
    n = std::min(rule.n_fixed, rank);
  } else if (rule.mode == TruncationRule::Mode::SingularValueRatio) {
    n = 0;
    while (n < rank && s[static_cast<Eigen::Index>(n)] >= rule.ratio * s[0]) ++n;
    if (rule.n_fixed > 0) n = std::min(n, rule.n_fixed);
  } else if (rule.energy < 1.0) {
    const double total = s.squaredNorm();
    double acc = 0.0;
    n = 0;
    while (n < rank && acc < rule.energy * total) {
      acc += s[static_cast<Eigen::Index>(n)] * s[static_cast<Eigen::Index>(n)];
      ++n;
    }
  }
  res.n = n;
  res.basis = svd.left.leftCols(static_cast<Eigen::Index>(n));
  fix_signs(res.basis);
  return res;
}

Eigen::MatrixXd electric_field_basis(const PhaseGrid& grid, const Eigen::MatrixXd& phi_phi) {
  Eigen::MatrixXd e(phi_phi.rows(), phi_phi.cols());
  for (Eigen::Index c = 0; c < phi_phi.cols(); ++c) {
    e.col(c) = electric_field(std::span<const double>(phi_phi.col(c).data(), grid.nx), grid.length()).values;
  }
  return e;
}

WindowBasis build_window_basis(std::size_t window_index, const SnapshotMatrices& snapshots, const PhaseGrid& grid,
                               const TruncationRule& rule_f, const TruncationRule& rule_phi) {
  WindowBasis b;
  b.window_index = window_index;
  auto pf = pod_basis(snapshots.u_f, rule_f);
  b.phi_f = std::move(pf.basis);
  b.sv_f = std::move(pf.singular_values);
  auto pp = pod_basis(snapshots.u_phi, rule_phi);
  b.phi_phi = std::move(pp.basis);
  b.sv_phi = std::move(pp.singular_values);
  b.phi_e = electric_field_basis(grid, b.phi_phi);
  return b;
}

std::vector<WindowBasis> build_window_bases(const std::vector<SnapshotGroup>& groups,
                                            const std::vector<TrajectorySource*>& runs,
                                            const TruncationRule& rule_f, const TruncationRule& rule_phi) {
  if (groups.empty()) fail(ErrorCode::Config, "no snapshot groups");
  std::vector<WindowBasis> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    out.push_back(build_window_basis(g.window_index, assemble_group(g, runs), runs.front()->grid(), rule_f, rule_phi));
  }
  return out;
}

double orthonormality_defect(const Eigen::MatrixXd& phi) {
  if (phi.cols() == 0) return 0.0;
  return (phi.transpose() * phi - Eigen::MatrixXd::Identity(phi.cols(), phi.cols())).cwiseAbs().maxCoeff();
}

}  // namespace vrom
