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
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fom.hpp"
#include "phase_space.hpp"
#include "pod.hpp"
#include "rom_online.hpp"

namespace vrom {

struct StudyConfig {
  std::size_t nx = 256;
  std::size_t nv = 256;
  double v0 = 1.0;
  double dt = 0.0025;
  double t_final = 10.0;
  std::size_t n_windows = 100;
  TruncationRule rule_f = TruncationRule::sv_ratio(3e-8);
  TruncationRule rule_phi = TruncationRule::fixed(8);
  double rom_dt = 0.0025;
  bool phi_per_stage = true;
  double t_min = 0.08, t_max = 0.1;
  double alpha_min = 0.001, alpha_max = 0.0025;
  std::size_t n_t = 9, n_alpha = 7;
  std::vector<ParamPoint> extras{{0.07, 0.001, 1.0}, {0.07, 0.0025, 1.0}};
  std::vector<ParamPoint> recon_points{{0.095, 0.00225, 1.0}, {0.08, 0.0015, 1.0}, {0.07, 0.0025, 1.0}};
  std::vector<double> recon_times{8.0, 10.0};
  std::vector<ParamPoint> growth_points{{0.08, 0.0015, 1.0}, {0.095, 0.00225, 1.0}};
  /// Interior comparison points used besides the corners when fast is set.
  std::vector<ParamPoint> fast_points{{0.08, 0.0015, 1.0},
                                      {0.095, 0.00225, 1.0},
                                      {0.09, 0.00175, 1.0},
                                      {0.085, 0.002, 1.0},
                                      {0.0975, 0.00125, 1.0}};
  bool fast = false;
  std::size_t jobs = 1;
  std::size_t max_tensor_bytes = std::size_t{1} << 30;

  static StudyConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  PhaseGrid grid() const { return build_grid(nx, nv, v0); }
  FomConfig fom_config(std::size_t stride = 1) const;
  std::vector<ParamPoint> corners() const;
  /// Lattice in T-major order: index i_t * n_alpha + i_alpha.
  std::vector<ParamPoint> lattice() const;
};

/// ||f - f_rom||_2 / ||f||_2; UndefinedError when ||f|| = 0.
double relative_error(const DistributionField& f, const DistributionField& f_rom);
double relative_error(const Eigen::VectorXd& f, const Eigen::VectorXd& f_rom);

/// Filename-safe label such as "0.08_0.0015_1".
std::string mu_label(const ParamPoint& mu);

struct GrowthFit {
  double t_lo = 0.0, t_hi = 0.0;
  double slope = 0.0;
};
/*! Least-squares slope of log max|E| over the linear growth stage of a reference
 *  series: the interval where log max|E| climbs from 25% to 75% of the way from
 *  its pre-peak minimum to its peak.
 */
GrowthFit growth_interval(const std::vector<double>& times, const std::vector<double>& max_e);
double log_slope(const std::vector<double>& times, const std::vector<double>& max_e, double t_lo, double t_hi);

struct PointResult {
  ParamPoint mu;
  std::string role;  ///< "lattice" or "extra"
  std::size_t lattice_index = 0;
  bool training = false;
  bool has_fom = false;
  double epsilon = 0.0;
  double fom_seconds = 0.0;
  double rom_seconds = 0.0;
  std::size_t rom_full_order_ops = 0;
  std::vector<double> times;
  std::vector<double> fom_max_e;
  std::vector<double> rom_max_e;
  std::vector<std::string> recon_files;  ///< relative to the workspace

  nlohmann::json to_json() const;
  static PointResult from_json(const nlohmann::json& j);
};

struct GrowthResult {
  ParamPoint mu;
  double t_lo = 0.0, t_hi = 0.0;
  double fom_slope = 0.0, rom_slope = 0.0;
  double relative_difference = 0.0;
};

struct StudyReport {
  StudyConfig config;
  std::filesystem::path workspace;
  std::vector<PointResult> points;
  std::vector<GrowthResult> growth;
  nlohmann::json training;  ///< model build summary

  bool empty() const { return points.empty(); }
};

struct TrainingSummary {
  std::filesystem::path model_dir;
  double offline_seconds = 0.0;
  std::vector<std::size_t> n_f, n_phi;
  std::size_t tensor_bytes = 0;
  double max_orthonormality_defect = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Streams the four corner trajectories to <workspace>/fom; existing complete runs are kept.
std::vector<std::filesystem::path> run_training_foms(const StudyConfig& config, const std::filesystem::path& workspace,
                                                     const ProgressFn& progress = {});

/// Window-by-window POD and operator build from trajectory files into model_dir.
TrainingSummary train_model(const StudyConfig& config, const std::vector<std::filesystem::path>& trajectories,
                            const std::filesystem::path& model_dir, const ProgressFn& progress = {});

/// Full pipeline with per-stage checkpoints under the workspace; a rerun resumes.
StudyReport run_study(const StudyConfig& config, const std::filesystem::path& workspace,
                      const ProgressFn& progress = {});

/// Reassembles a report from the workspace checkpoints.
StudyReport load_report(const std::filesystem::path& workspace);

/// errors.csv, maxE_<mu>.csv, timing.csv, recon_<mu>_<t>.bin and summary.json.
nlohmann::json emit_reports(const StudyReport& report, const std::filesystem::path& outdir);

/// Writes reconstructed fields (kind Fields, one record per field).
void write_fields(const std::filesystem::path& path, const PhaseGrid& grid, const ParamPoint& mu,
                  const std::vector<double>& times, const std::vector<Eigen::VectorXd>& fields);

}  // namespace vrom
