/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "container.hpp"
#include "fom.hpp"

namespace vrom {

/// Read access to a stored FOM run, in memory or on disk.
class TrajectorySource {
 public:
  virtual ~TrajectorySource() = default;
  virtual const PhaseGrid& grid() const = 0;
  virtual const ParamPoint& mu() const = 0;
  virtual double dt() const = 0;
  virtual std::size_t stride() const = 0;
  virtual const std::vector<double>& times() const = 0;
  virtual const std::vector<double>& max_e() const = 0;
  virtual Eigen::VectorXd f(std::size_t i) = 0;
  virtual Eigen::VectorXd phi(std::size_t i) = 0;
  std::size_t size() const { return times().size(); }
};

class MemoryTrajectory : public TrajectorySource {
 public:
  explicit MemoryTrajectory(const FomTrajectory& t) : t_(t) {}
  const PhaseGrid& grid() const override { return t_.grid; }
  const ParamPoint& mu() const override { return t_.mu; }
  double dt() const override { return t_.dt; }
  std::size_t stride() const override { return t_.stride; }
  const std::vector<double>& times() const override { return t_.times; }
  const std::vector<double>& max_e() const override { return t_.max_e; }
  Eigen::VectorXd f(std::size_t i) override { return t_.snapshots_f.at(i); }
  Eigen::VectorXd phi(std::size_t i) override { return t_.snapshots_phi.at(i); }

 private:
  const FomTrajectory& t_;
};

/*! Trajectory container layout (kind = Trajectory):
 *
 *    f   : n_records x (nx*nv), x-major per snapshot
 *    phi : n_records x nx
 *    t   : n_records
 *    maxE: n_records
 *
 *  with aux[0] = number of FOM steps N_t.
 */
class TrajectoryWriter : public SnapshotSink {
 public:
  TrajectoryWriter(const std::filesystem::path& path, const FomConfig& config, const ParamPoint& mu);

  void on_snapshot(std::size_t step, double t, const Eigen::VectorXd& f, const Eigen::VectorXd& phi,
                   double max_e) override;

  /// Finishes the container and writes the JSON sidecar next to it (path + ".json").
  nlohmann::json finish(double wall_seconds);

 private:
  std::filesystem::path path_;
  FomConfig config_;
  ParamPoint mu_;
  ContainerWriter writer_;
  std::vector<double> times_, max_e_, phi_;
};

class TrajectoryFile : public TrajectorySource {
 public:
  /// Opens path (the container); the sidecar is optional and verified when verify is set.
  explicit TrajectoryFile(const std::filesystem::path& path, bool verify_checksum = false);

  const PhaseGrid& grid() const override { return grid_; }
  const ParamPoint& mu() const override { return mu_; }
  double dt() const override { return dt_; }
  std::size_t stride() const override { return stride_; }
  const std::vector<double>& times() const override { return times_; }
  const std::vector<double>& max_e() const override { return max_e_; }
  Eigen::VectorXd f(std::size_t i) override;
  Eigen::VectorXd phi(std::size_t i) override;

 private:
  ContainerReader reader_;
  PhaseGrid grid_;
  ParamPoint mu_;
  double dt_ = 0.0;
  std::size_t stride_ = 1;
  std::vector<double> times_, max_e_;
};

std::filesystem::path sidecar_path(const std::filesystem::path& container);

/// Number of snapshots fom_run stores for config.
std::size_t stored_snapshot_count(const FomConfig& config);

}  // namespace vrom
