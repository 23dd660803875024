/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "rom_online.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "container.hpp"
#include "error.hpp"
#include "fom.hpp"

namespace vrom {

namespace {

thread_local std::size_t g_full_order_ops = 0;

}  // namespace

std::size_t full_order_operation_count() { return g_full_order_ops; }

Eigen::VectorXd lift(const Eigen::MatrixXd& phi, const Eigen::VectorXd& coeffs) {
  ++g_full_order_ops;
  return phi * coeffs;
}

Eigen::VectorXd project(const Eigen::MatrixXd& phi, const Eigen::VectorXd& f) {
  ++g_full_order_ops;
  return phi.transpose() * f;
}

// ---- model -----------------------------------------------------------------

RomModel::RomModel(const PhaseGrid& grid, WindowPartition partition, std::vector<WindowBasis> bases,
                   std::vector<WindowOperators> ops)
    : grid_(grid), partition_(std::move(partition)), ops_(std::move(ops)) {
  if (bases.size() != ops_.size() || ops_.size() != partition_.n_windows()) {
    fail(ErrorCode::ModelIntegrity, "model window counts disagree");
  }
  for (auto& b : bases) {
    if (static_cast<std::size_t>(b.phi_f.rows()) != grid_.size()) {
      fail(ErrorCode::ModelIntegrity, "basis size does not match the model grid");
    }
    phi_e_.push_back(std::move(b.phi_e));
    phi_phi_.push_back(std::move(b.phi_phi));
    phi_f_.push_back(std::make_shared<const Eigen::MatrixXd>(std::move(b.phi_f)));
  }
}

RomModel RomModel::load(const std::filesystem::path& dir, bool verify) {
  const auto manifest = read_json(dir / "manifest.json");
  if (manifest.value("format", "") != "vrom-model") fail(ErrorCode::Format, "not a vrom model manifest");
  RomModel model;
  model.dir_ = dir;
  model.grid_ = grid_from_json(manifest.at("grid"));
  model.partition_.boundaries = manifest.at("boundaries").get<std::vector<double>>();
  const auto& windows = manifest.at("windows");
  if (windows.size() != model.partition_.n_windows()) {
    fail(ErrorCode::ModelIntegrity, "manifest lists " + std::to_string(windows.size()) + " windows, expected " +
                                        std::to_string(model.partition_.n_windows()));
  }
  for (std::size_t m = 0; m < windows.size(); ++m) {
    const auto& w = windows[m];
    const auto bfile = dir / w.at("basis_file").get<std::string>();
    const auto ofile = dir / w.at("operators_file").get<std::string>();
    if (!std::filesystem::exists(bfile) || !std::filesystem::exists(ofile)) {
      fail(ErrorCode::ModelIntegrity, "missing operator files for window " + std::to_string(m));
    }
    if (verify) {
      if (file_checksum(bfile) != w.at("basis_checksum").get<std::string>() ||
          file_checksum(ofile) != w.at("operators_checksum").get<std::string>()) {
        fail(ErrorCode::ModelIntegrity, "checksum mismatch in window " + std::to_string(m));
      }
    }
    auto b = read_basis_file(bfile, m, false);
    auto ops = read_operators_file(ofile);
    if (ops.n_f != b.n_f() || ops.n_phi != b.n_phi()) {
      fail(ErrorCode::ModelIntegrity, "basis and operator sizes disagree in window " + std::to_string(m));
    }
    if (m + 1 < windows.size() && !ops.has_next) {
      fail(ErrorCode::ModelIntegrity, "window " + std::to_string(m) + " lacks its transition projector");
    }
    model.phi_e_.push_back(std::move(b.phi_e));
    model.phi_phi_.push_back(std::move(b.phi_phi));
    model.ops_.push_back(std::move(ops));
    model.basis_files_.push_back(bfile);
    model.phi_f_.push_back(nullptr);
  }
  return model;
}

std::shared_ptr<const Eigen::MatrixXd> RomModel::phi_f(std::size_t m) const {
  std::lock_guard lock(*cache_mutex_);
  auto& slot = phi_f_.at(m);
  if (!slot) {
    auto b = read_basis_file(basis_files_.at(m), m, true);
    slot = std::make_shared<const Eigen::MatrixXd>(std::move(b.phi_f));
  }
  return slot;
}

// ---- reduced dynamics --------------------------------------------------------

ReducedPoissonSolver::ReducedPoissonSolver(const WindowOperators& ops) : ops_(&ops) {
  if (ops.n_phi == 0) return;
  llt_.compute(ops.l_hat);
  if (llt_.info() != Eigen::Success) {
    fail(ErrorCode::SingularReducedPoisson, "reduced Laplacian is not positive definite");
  }
}

Eigen::VectorXd ReducedPoissonSolver::solve(const Eigen::VectorXd& f_hat) const {
  if (ops_->n_phi == 0) return Eigen::VectorXd();
  return llt_.solve(ops_->m_hat * f_hat);
}

Eigen::VectorXd rom_rhs(const Eigen::VectorXd& f_hat, const WindowOperators& ops, const ReducedPoissonSolver& poisson,
                        Eigen::VectorXd* phi_out) {
  if (static_cast<std::size_t>(f_hat.size()) != ops.n_f) {
    fail(ErrorCode::Config, "reduced state has " + std::to_string(f_hat.size()) + " entries, operators expect " +
                                std::to_string(ops.n_f));
  }
  Eigen::VectorXd phi = poisson.solve(f_hat);
  Eigen::VectorXd out = ops.g1 * f_hat;
  if (ops.n_phi > 0) out += contract_g2(ops, phi, f_hat);
  if (phi_out) *phi_out = std::move(phi);
  return out;
}

Eigen::VectorXd rom_rhs(const RomState& state, const WindowOperators& ops, Eigen::VectorXd* phi_out) {
  ReducedPoissonSolver poisson(ops);
  return rom_rhs(state.f_hat, ops, poisson, phi_out);
}

double reduced_max_e(const Eigen::MatrixXd& phi_e, const Eigen::VectorXd& phi_hat) {
  if (phi_hat.size() == 0) return 0.0;
  return (phi_e * phi_hat).cwiseAbs().maxCoeff();
}

RomState rom_init(const RomModel& model, const ParamPoint& mu) {
  const auto f0 = initial_condition(model.grid(), mu);
  if (!(build_grid(model.grid().nx, model.grid().nv, mu.v0) == model.grid())) {
    fail(ErrorCode::Config, "parameter point v0 does not match the model grid");
  }
  RomState s;
  s.window = 0;
  s.t = model.partition().start(0);
  s.f_hat = project(*model.phi_f(0), f0.values);
  s.phi_hat = ReducedPoissonSolver(model.ops(0)).solve(s.f_hat);
  return s;
}

namespace {

std::size_t exact_steps(double span, double dt, const char* what) {
  const double ratio = span / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "ROM time step " << dt << " does not divide the " << what << " (" << span << ")";
    fail(ErrorCode::Config, os.str());
  }
  return static_cast<std::size_t>(n);
}

}  // namespace

RomTrajectory rom_run_from(const RomModel& model, RomState state, const RomOptions& options) {
  const auto clock_start = std::chrono::steady_clock::now();
  const auto& part = model.partition();
  if (!(options.dt > 0.0)) fail(ErrorCode::Config, "ROM time step must be positive");
  const double t_final = options.t_final < 0.0 ? part.t_final() : options.t_final;
  if (t_final > part.t_final() * (1.0 + 1e-12)) fail(ErrorCode::OutOfRange, "final time beyond the trained windows");
  const double t0 = state.t;
  const std::size_t steps = exact_steps(t_final - t0, options.dt, "simulated interval");
  std::vector<std::size_t> boundary_step(part.n_windows() + 1, 0);
  for (std::size_t m = 0; m <= part.n_windows(); ++m) {
    boundary_step[m] = exact_steps(part.start(0) + (part.boundaries[m] - part.start(0)), options.dt, "window edges");
  }
  if (model.n_windows() == 0) fail(ErrorCode::ModelIntegrity, "model has no windows");
  std::size_t step0 = exact_steps(t0, options.dt, "start time");

  RomTrajectory traj;
  std::size_t m = state.window;
  if (static_cast<std::size_t>(state.f_hat.size()) != model.ops(m).n_f) {
    fail(ErrorCode::Config, "initial reduced state does not match its window");
  }
  std::optional<ReducedPoissonSolver> poisson(std::in_place, model.ops(m));
  Eigen::VectorXd f = state.f_hat;
  Eigen::VectorXd phi = poisson->solve(f);

  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.windows.push_back(m);
    traj.f_hat.push_back(f);
    traj.phi_hat.push_back(phi);
    traj.max_e.push_back(reduced_max_e(model.phi_e(m), phi));
  };
  record(t0);

  const double dt = options.dt;
  Eigen::VectorXd k1, k2, k3, k4, stage, phi_stage;
  const std::size_t ops_before = full_order_operation_count();
  for (std::size_t n = 0; n < steps; ++n) {
    const auto& ops = model.ops(m);
    const auto& ps = *poisson;
    if (options.phi_per_stage) {
      k1 = rom_rhs(f, ops, ps);
      stage = f + 0.5 * dt * k1;
      k2 = rom_rhs(stage, ops, ps);
      stage = f + 0.5 * dt * k2;
      k3 = rom_rhs(stage, ops, ps);
      stage = f + dt * k3;
      k4 = rom_rhs(stage, ops, ps);
    } else {
      // Field frozen over the step at its value for the step's initial state.
      phi_stage = ps.solve(f);
      auto frozen = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd r = ops.g1 * x;
        if (ops.n_phi > 0) r += contract_g2(ops, phi_stage, x);
        return r;
      };
      k1 = frozen(f);
      k2 = frozen(f + 0.5 * dt * k1);
      k3 = frozen(f + 0.5 * dt * k2);
      k4 = frozen(f + dt * k3);
    }
    f += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const std::size_t global_step = step0 + n + 1;
    const double t = static_cast<double>(global_step) * dt;
    if (!f.allFinite()) {
      std::ostringstream os;
      os << "ROM blew up in window " << m << "; last valid time t = " << t - dt;
      throw BlowupError(t - dt, os.str());
    }
    if (m + 1 < model.n_windows() && global_step == boundary_step[m + 1] && n + 1 < steps + 1) {
      const auto& cur = model.ops(m);
      if (!cur.has_next) fail(ErrorCode::ModelIntegrity, "missing transition out of window " + std::to_string(m));
      Eigen::VectorXd next = cur.t_next * f;
      if (options.check_handoff) {
        const auto pa = model.phi_f(m);
        const auto pb = model.phi_f(m + 1);
        const Eigen::VectorXd before = lift(*pa, f);
        const Eigen::VectorXd after = lift(*pb, next);
        const Eigen::VectorXd reprojected = lift(*pb, project(*pb, before));
        traj.handoff_jumps.push_back((after - before).norm());
        traj.handoff_residuals.push_back((before - reprojected).norm());
      }
      f = std::move(next);
      ++m;
      poisson.emplace(model.ops(m));
      traj.handoff_times.push_back(t);
    }
    phi = poisson->solve(f);
    record(t);
  }
  traj.full_order_ops_in_loop = full_order_operation_count() - ops_before;
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return traj;
}

RomTrajectory rom_run(const RomModel& model, const ParamPoint& mu, const RomOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  auto traj = rom_run_from(model, rom_init(model, mu), options);
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

// ---- reconstruction ----------------------------------------------------------

DistributionField reconstruct(const RomState& state, const RomModel& model) {
  DistributionField out{model.grid(), lift(*model.phi_f(state.window), state.f_hat), state.t};
  return out;
}

DistributionField reconstruct(const RomTrajectory& traj, const RomModel& model, double t) {
  if (traj.times.empty()) fail(ErrorCode::OutOfRange, "empty reduced trajectory");
  const double span = traj.times.back() - traj.times.front();
  const double tol = 1e-9 * std::max(1.0, span);
  auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t - tol);
  if (it == traj.times.end() || std::abs(*it - t) > tol) {
    std::ostringstream os;
    os << "time " << t << " is not a step of the reduced trajectory [" << traj.times.front() << ", "
       << traj.times.back() << "]";
    fail(ErrorCode::OutOfRange, os.str());
  }
  const auto i = static_cast<std::size_t>(std::distance(traj.times.begin(), it));
  RomState s{traj.windows[i], traj.f_hat[i], traj.phi_hat[i], traj.times[i]};
  return reconstruct(s, model);
}

std::vector<DistributionField> reconstruct(const RomTrajectory& traj, const RomModel& model,
                                           const std::vector<double>& times) {
  std::vector<DistributionField> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(reconstruct(traj, model, t));
  return out;
}

void write_rom_trajectory(const std::filesystem::path& bin, const std::filesystem::path& csv, const RomTrajectory& traj,
                          const PhaseGrid& grid, const ParamPoint& mu, double dt) {
  ContainerHeader h;
  h.kind = ContainerKind::RomTrajectory;
  h.nx = static_cast<std::uint32_t>(grid.nx);
  h.nv = static_cast<std::uint32_t>(grid.nv);
  h.dt = dt;
  h.mu = mu;
  h.n_records = traj.times.size();
  h.record_len = 0;  // variable: [t, window, n_f, f_hat..., n_phi, phi_hat...]
  {
    ContainerWriter w(bin, h);
    std::vector<double> rec;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      rec.assign({traj.times[i], static_cast<double>(traj.windows[i]), static_cast<double>(traj.f_hat[i].size())});
      rec.insert(rec.end(), traj.f_hat[i].data(), traj.f_hat[i].data() + traj.f_hat[i].size());
      rec.push_back(static_cast<double>(traj.phi_hat[i].size()));
      rec.insert(rec.end(), traj.phi_hat[i].data(), traj.phi_hat[i].data() + traj.phi_hat[i].size());
      w.write(rec);
    }
    w.close();
  }
  std::ofstream out(csv);
  if (!out) fail(ErrorCode::Io, "cannot open " + csv.string());
  out << "t,max_e\n" << std::setprecision(17);
  for (std::size_t i = 0; i < traj.times.size(); ++i) out << traj.times[i] << ',' << traj.max_e[i] << '\n';
  if (!out) fail(ErrorCode::Io, "write failed on " + csv.string());
}

}  // namespace vrom
