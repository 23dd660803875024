/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "phase_space.hpp"
#include "pod.hpp"
#include "rom_offline.hpp"
#include "snapshots.hpp"

namespace vrom {

/*! Trained time-windowed ROM.
 *
 *  Reduced operators and the small x-space bases are held in memory. The
 *  distribution bases Phi_f (N_f x n_f each) are only needed for the initial
 *  projection and for reconstruction; a loaded model reads them on demand.
 *  Safe to share between threads once constructed.
 */
class RomModel {
 public:
  RomModel(const PhaseGrid& grid, WindowPartition partition, std::vector<WindowBasis> bases,
           std::vector<WindowOperators> ops);

  /// Loads manifest.json + per-window containers; verify compares file checksums with the manifest.
  static RomModel load(const std::filesystem::path& dir, bool verify = true);

  const PhaseGrid& grid() const { return grid_; }
  const WindowPartition& partition() const { return partition_; }
  std::size_t n_windows() const { return ops_.size(); }
  const WindowOperators& ops(std::size_t m) const { return ops_.at(m); }
  const Eigen::MatrixXd& phi_e(std::size_t m) const { return phi_e_.at(m); }
  const Eigen::MatrixXd& phi_phi(std::size_t m) const { return phi_phi_.at(m); }
  std::shared_ptr<const Eigen::MatrixXd> phi_f(std::size_t m) const;

 private:
  RomModel() = default;

  PhaseGrid grid_;
  WindowPartition partition_;
  std::vector<WindowOperators> ops_;
  std::vector<Eigen::MatrixXd> phi_e_;
  std::vector<Eigen::MatrixXd> phi_phi_;
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> basis_files_;
  mutable std::vector<std::shared_ptr<const Eigen::MatrixXd>> phi_f_;
  mutable std::shared_ptr<std::mutex> cache_mutex_ = std::make_shared<std::mutex>();
};

struct RomState {
  std::size_t window = 0;
  Eigen::VectorXd f_hat;
  Eigen::VectorXd phi_hat;
  double t = 0.0;
};

struct RomOptions {
  double dt = 0.0025;
  double t_final = -1.0;           ///< negative: the model's final time
  bool phi_per_stage = true;       ///< re-solve the reduced Poisson system at every RK stage
  bool check_handoff = false;      ///< lift-then-project continuity check at each boundary (O(N_f))
};

struct RomTrajectory {
  std::vector<double> times;
  std::vector<std::size_t> windows;
  std::vector<Eigen::VectorXd> f_hat;
  std::vector<Eigen::VectorXd> phi_hat;
  std::vector<double> max_e;
  std::vector<double> handoff_times;
  /// ||Phi_{m+1} T f - Phi_m f|| and the projection residual of Phi_m f onto span(Phi_{m+1}), when checked.
  std::vector<double> handoff_jumps;
  std::vector<double> handoff_residuals;
  std::size_t full_order_ops_in_loop = 0;
  double wall_seconds = 0.0;
};

/// Count of O(N_f) operations (lifts and projections) performed on this thread so far.
std::size_t full_order_operation_count();

/// Solves L_hat phi = M_hat f with a prefactored L_hat.
class ReducedPoissonSolver {
 public:
  explicit ReducedPoissonSolver(const WindowOperators& ops);
  Eigen::VectorXd solve(const Eigen::VectorXd& f_hat) const;

 private:
  const WindowOperators* ops_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

RomState rom_init(const RomModel& model, const ParamPoint& mu);

/// d f_hat / dt = G1 f + G2(phi) f with phi from the reduced Poisson system; phi_out receives phi.
Eigen::VectorXd rom_rhs(const RomState& state, const WindowOperators& ops, Eigen::VectorXd* phi_out = nullptr);
Eigen::VectorXd rom_rhs(const Eigen::VectorXd& f_hat, const WindowOperators& ops, const ReducedPoissonSolver& poisson,
                        Eigen::VectorXd* phi_out = nullptr);

RomTrajectory rom_run(const RomModel& model, const ParamPoint& mu, const RomOptions& options = {});
/// Continues from an explicit initial state (e.g. a given initial condition).
RomTrajectory rom_run_from(const RomModel& model, RomState state, const RomOptions& options = {});

/// max over x of |Phi_E phi_hat|.
double reduced_max_e(const Eigen::MatrixXd& phi_e, const Eigen::VectorXd& phi_hat);

DistributionField reconstruct(const RomState& state, const RomModel& model);
DistributionField reconstruct(const RomTrajectory& traj, const RomModel& model, double t);
std::vector<DistributionField> reconstruct(const RomTrajectory& traj, const RomModel& model,
                                           const std::vector<double>& times);

/// Lift Phi c and projection Phi^T f; both count as full-order work.
Eigen::VectorXd lift(const Eigen::MatrixXd& phi, const Eigen::VectorXd& coeffs);
Eigen::VectorXd project(const Eigen::MatrixXd& phi, const Eigen::VectorXd& f);

/// Binary reduced trajectory (kind RomTrajectory) and a (t, max|E|) CSV.
void write_rom_trajectory(const std::filesystem::path& bin, const std::filesystem::path& csv, const RomTrajectory& traj,
                          const PhaseGrid& grid, const ParamPoint& mu, double dt);

}  // namespace vrom
