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

#include "trajectory_io.hpp"

namespace vrom {

/// t_0 = 0 < t_1 < ... < t_{N_w} = t_f.
struct WindowPartition {
  std::vector<double> boundaries;

  std::size_t n_windows() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  double t_final() const { return boundaries.back(); }
  double start(std::size_t m) const { return boundaries.at(m); }
  double end(std::size_t m) const { return boundaries.at(m + 1); }
  /// Window holding t under half-open membership; t_f itself belongs to the last window.
  std::size_t window_of(double t) const;
};

WindowPartition partition_uniform(double t_final, std::size_t n_windows);

/// Snapshot indices of one window, shared by every run (all runs share the time axis).
struct SnapshotGroup {
  std::size_t window_index = 0;
  std::vector<std::size_t> member_time_indices;
  std::size_t n_runs = 0;

  std::size_t columns() const { return member_time_indices.size() * n_runs; }
};

std::vector<SnapshotGroup> group_snapshots(const std::vector<TrajectorySource*>& runs,
                                           const WindowPartition& partition);

/// Column-ordered (run-major, then time) snapshot matrices of one group.
struct SnapshotMatrices {
  Eigen::MatrixXd u_f;
  Eigen::MatrixXd u_phi;
};

SnapshotMatrices assemble_group(const SnapshotGroup& group, const std::vector<TrajectorySource*>& runs);

}  // namespace vrom
