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
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "phase_space.hpp"
#include "pod.hpp"
#include "snapshots.hpp"

namespace vrom {

/*! Reduced operators of one time window.
 *
 *  The reduced ODE reads  df/dt = G1 f + G2(phi) f  with the transport sign
 *  already folded in, and phi solves  L_hat phi = M_hat f.
 */
struct WindowOperators {
  std::size_t n_f = 0;
  std::size_t n_phi = 0;
  Eigen::MatrixXd g1;             ///< n_f x n_f
  std::vector<double> g2;         ///< n_f x n_phi x n_f, i-major then j then k
  Eigen::MatrixXd l_hat;          ///< n_phi x n_phi, symmetric positive definite
  Eigen::MatrixXd m_hat;          ///< n_phi x n_f
  Eigen::MatrixXd t_next;         ///< n_f(next) x n_f; empty for the last window
  Eigen::MatrixXd t_next_phi;     ///< n_phi(next) x n_phi
  bool has_next = false;

  double g2_at(std::size_t i, std::size_t j, std::size_t k) const { return g2[(i * n_phi + j) * n_f + k]; }
};

/// -[(Dx_up (x) diag(v+)) + (Dx_down (x) diag(v-))] f with the linear derivative matrices.
Eigen::VectorXd linear_x_transport(const PhaseGrid& grid, const LinearDerivatives& d, const Eigen::VectorXd& f);
/// -[diag(e) (x) Dv] f.
Eigen::VectorXd linear_v_transport(const PhaseGrid& grid, const LinearDerivatives& d, std::span<const double> e,
                                   const Eigen::VectorXd& f);

/// Full-order right-hand side built from the linear derivative matrices (the operator the ROM projects).
class LinearVlasovOperator {
 public:
  explicit LinearVlasovOperator(const PhaseGrid& grid);
  void evaluate(const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution* fields = nullptr) const;
  Eigen::VectorXd apply_with_field(const Eigen::VectorXd& f, std::span<const double> e) const;
  const LinearDerivatives& derivatives() const { return d_; }

 private:
  PhaseGrid grid_;
  LinearDerivatives d_;
};

Eigen::MatrixXd build_g1(const WindowBasis& basis, const PhaseGrid& grid);
Eigen::MatrixXd build_g1(const WindowBasis& basis, const PhaseGrid& grid, const LinearDerivatives& d);

/// Throws ErrorCode::MemoryCap when n_f^2 n_phi * 8 bytes exceeds max_bytes.
std::vector<double> build_g2(const WindowBasis& basis, const PhaseGrid& grid,
                             std::size_t max_bytes = std::size_t{1} << 30);

struct ReducedPoisson {
  Eigen::MatrixXd l_hat;
  Eigen::MatrixXd m_hat;
};
ReducedPoisson build_reduced_poisson(const WindowBasis& basis, const PhaseGrid& grid);

struct Transition {
  Eigen::MatrixXd t_f;
  Eigen::MatrixXd t_phi;
};
/// Transitions m -> m+1 for every consecutive pair; warnings collects loss-of-information notices.
std::vector<Transition> build_transitions(const std::vector<WindowBasis>& bases,
                                          std::vector<std::string>* warnings = nullptr);

struct OfflineOptions {
  std::size_t max_tensor_bytes = std::size_t{1} << 30;
};

std::vector<WindowOperators> build_window_operators(const std::vector<WindowBasis>& bases, const PhaseGrid& grid,
                                                    const OfflineOptions& options = {},
                                                    std::vector<std::string>* warnings = nullptr);
WindowOperators build_operators_for(const WindowBasis& basis, const PhaseGrid& grid,
                                    const OfflineOptions& options = {});

/// Dense products of G2 with phi and f: returns sum_j phi_j G2[:, j, :] f.
Eigen::VectorXd contract_g2(const WindowOperators& ops, const Eigen::VectorXd& phi_hat, const Eigen::VectorXd& f_hat);

// ---- persistence -----------------------------------------------------------

/*! Model directory layout:
 *
 *    manifest.json            window boundaries, per-window sizes, checksums, build config
 *    basis_<m>.vrom           kind Basis: phi_f columns, then phi_phi, phi_e, sv_f, sv_phi
 *    operators_<m>.vrom       kind Operators: G1, G2, L_hat, M_hat, T_next, T_next_phi (row-major)
 */
nlohmann::json write_model(const std::filesystem::path& dir, const PhaseGrid& grid, const WindowPartition& partition,
                           const std::vector<WindowBasis>& bases, const std::vector<WindowOperators>& ops,
                           const nlohmann::json& build_config);

/// "<stem>_<m>.vrom"
std::string model_window_file(const char* stem, std::size_t m);

/// Per-window writers, used by streaming training.
nlohmann::json write_basis_file(const std::filesystem::path& path, const PhaseGrid& grid, const WindowBasis& b);
nlohmann::json write_operators_file(const std::filesystem::path& path, const PhaseGrid& grid,
                                    const WindowOperators& ops);
nlohmann::json write_model_manifest(const std::filesystem::path& dir, const PhaseGrid& grid,
                                    const WindowPartition& partition, const std::vector<nlohmann::json>& windows,
                                    const nlohmann::json& build_config);

WindowBasis read_basis_file(const std::filesystem::path& path, std::size_t window_index, bool load_phi_f = true);
WindowOperators read_operators_file(const std::filesystem::path& path);

}  // namespace vrom
