/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "phase_space.hpp"

namespace vrom {

struct FomConfig {
  PhaseGrid grid;
  double dt = 0.0025;
  double t_final = 10.0;
  std::size_t snapshot_stride = 1;

  /// Number of steps N_t; throws if t_final / dt is not an integer within rounding.
  std::size_t num_steps() const;
  void validate() const;
};

/// Switches used by manufactured-solution tests; production runs use the defaults.
struct FomOptions {
  bool self_consistent_field = true;  ///< false forces E = 0 (free streaming)
};

/// In-memory trajectory. Large runs stream through a SnapshotSink instead.
struct FomTrajectory {
  PhaseGrid grid;
  ParamPoint mu;
  double dt = 0.0;
  std::size_t stride = 1;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> snapshots_f;
  std::vector<Eigen::VectorXd> snapshots_phi;
  std::vector<double> max_e;  ///< max over x of |E| at each stored time

  std::size_t size() const { return times.size(); }
};

/// Receives every stored step of a FOM run, in order.
class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void on_snapshot(std::size_t step, double t, const Eigen::VectorXd& f, const Eigen::VectorXd& phi,
                           double max_e) = 0;
};

DistributionField initial_condition(const PhaseGrid& grid, const ParamPoint& mu);

/// phi and E from the charge density of f: -d2phi/dx2 = rho - mean(rho), E = -dphi/dx.
struct FieldSolution {
  Eigen::VectorXd phi;
  Eigen::VectorXd e;
};
FieldSolution solve_fields(const PhaseGrid& grid, std::span<const double> f);

/*! Semi-discrete right-hand side G(f) = -d/dx(v f) - d/dv(E f).
 *
 *  Both fluxes use Jiang-Shu WENO5 in conservative form, upwinded by sign(v)
 *  along x (periodic) and by sign(E) along v (three zero ghosts at each wall).
 *  Holds scratch buffers, so one instance must not be shared between threads.
 */
class VlasovRhs {
 public:
  explicit VlasovRhs(const PhaseGrid& grid, FomOptions options = {});

  /// Evaluates out = G(f). When fields is non-null it receives the phi/E used.
  void evaluate(const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution* fields = nullptr);

  /// Flux-divergence pieces with a given field; exposed for order studies.
  void x_transport(const double* f, double* out);
  void v_transport(const double* f, std::span<const double> e, double* out);

  const PhaseGrid& grid() const { return grid_; }

 private:
  PhaseGrid grid_;
  FomOptions options_;
  std::vector<double> flux_;
  std::vector<double> padded_;
  std::vector<double> v_part_;
};

Eigen::VectorXd fom_rhs(const DistributionField& f, FomOptions options = {});

/// Total mass sum(f) dx dv.
double total_mass(const PhaseGrid& grid, const Eigen::VectorXd& f);

using RhsFunction = std::function<void(const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution* fields)>;

/// Classical RK4 march of df/dt = rhs(f) from f0, emitting step 0, every stride-th step and the final step.
std::size_t march_rk4(const FomConfig& config, const Eigen::VectorXd& f0, const RhsFunction& rhs, SnapshotSink& sink);

/// Streams every stored step into sink; returns the number of stored snapshots.
std::size_t fom_run(const FomConfig& config, const ParamPoint& mu, SnapshotSink& sink, FomOptions options = {});

/// Same march starting from an arbitrary state at t = 0.
std::size_t fom_run_from(const FomConfig& config, const Eigen::VectorXd& f0, SnapshotSink& sink,
                         FomOptions options = {});

FomTrajectory fom_run(const FomConfig& config, const ParamPoint& mu, FomOptions options = {});

/// Sink collecting into a FomTrajectory; keep_all_f = false retains only the last f.
class TrajectoryRecorder : public SnapshotSink {
 public:
  TrajectoryRecorder(FomTrajectory& out, bool keep_all_f) : out_(out), keep_all_f_(keep_all_f) {}
  void on_snapshot(std::size_t step, double t, const Eigen::VectorXd& f, const Eigen::VectorXd& phi,
                   double max_e) override;

 private:
  FomTrajectory& out_;
  bool keep_all_f_;
};

}  // namespace vrom
