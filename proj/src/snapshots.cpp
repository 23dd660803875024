/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "snapshots.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace vrom {

namespace {

// Relative slack for comparing snapshot times (n * dt) against window edges.
constexpr double kTimeSlack = 1e-9;

}  // namespace

WindowPartition partition_uniform(double t_final, std::size_t n_windows) {
  if (n_windows < 1) fail(ErrorCode::Config, "need at least one window");
  if (!(t_final > 0.0)) fail(ErrorCode::Config, "final time must be positive");
  WindowPartition p;
  p.boundaries.resize(n_windows + 1);
  for (std::size_t j = 0; j <= n_windows; ++j) {
    p.boundaries[j] = t_final * static_cast<double>(j) / static_cast<double>(n_windows);
  }
  p.boundaries.back() = t_final;
  return p;
}

std::size_t WindowPartition::window_of(double t) const {
  const std::size_t nw = n_windows();
  const double tol = kTimeSlack * (t_final() - boundaries.front()) / static_cast<double>(nw);
  if (t < boundaries.front() - tol || t > t_final() + tol) {
    fail(ErrorCode::OutOfRange, "time " + std::to_string(t) + " lies outside the window partition");
  }
  // Last m with boundaries[m] <= t (within slack); clamp the final time into the last window.
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t + tol);
  const auto m = static_cast<std::size_t>(std::distance(boundaries.begin(), it)) - 1;
  return std::min(m, nw - 1);
}

std::vector<SnapshotGroup> group_snapshots(const std::vector<TrajectorySource*>& runs,
                                           const WindowPartition& partition) {
  if (runs.empty()) fail(ErrorCode::Config, "no trajectories to group");
  const auto& ref = *runs.front();
  for (const auto* r : runs) {
    if (!(r->grid() == ref.grid()) || r->dt() != ref.dt() || r->stride() != ref.stride() ||
        r->times() != ref.times()) {
      fail(ErrorCode::Config, "trajectories do not share grid, dt, stride and time axis");
    }
  }
  const auto& times = ref.times();
  if (times.empty()) fail(ErrorCode::Config, "trajectory has no snapshots");
  const double tol = kTimeSlack * partition.t_final();
  if (std::abs(times.back() - partition.t_final()) > tol || std::abs(times.front() - partition.start(0)) > tol) {
    fail(ErrorCode::Config, "trajectory time axis does not span the window partition");
  }

  std::vector<SnapshotGroup> groups(partition.n_windows());
  for (std::size_t m = 0; m < groups.size(); ++m) {
    groups[m].window_index = m;
    groups[m].n_runs = runs.size();
  }
  for (std::size_t n = 0; n < times.size(); ++n) {
    groups[partition.window_of(times[n])].member_time_indices.push_back(n);
  }
  return groups;
}

SnapshotMatrices assemble_group(const SnapshotGroup& group, const std::vector<TrajectorySource*>& runs) {
  if (runs.size() != group.n_runs) fail(ErrorCode::Config, "run count does not match the snapshot group");
  if (group.columns() == 0) fail(ErrorCode::Config, "window " + std::to_string(group.window_index) + " is empty");
  const auto& grid = runs.front()->grid();
  SnapshotMatrices s;
  s.u_f.resize(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(group.columns()));
  s.u_phi.resize(static_cast<Eigen::Index>(grid.nx), static_cast<Eigen::Index>(group.columns()));
  Eigen::Index col = 0;
  for (auto* run : runs) {
    for (std::size_t n : group.member_time_indices) {
      s.u_f.col(col) = run->f(n);
      s.u_phi.col(col) = run->phi(n);
      ++col;
    }
  }
  return s;
}

}  // namespace vrom
