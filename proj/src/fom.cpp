/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "fom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace vrom {

std::size_t FomConfig::num_steps() const {
  if (!(dt > 0.0)) fail(ErrorCode::Config, "time step must be positive");
  if (t_final < 0.0) fail(ErrorCode::Config, "final time must be non-negative");
  const double ratio = t_final / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "t_final / dt = " << ratio << " is not an integer";
    fail(ErrorCode::Config, os.str());
  }
  return static_cast<std::size_t>(n);
}

void FomConfig::validate() const {
  if (grid.nx < 8 || grid.nv < 8) fail(ErrorCode::Config, "FOM grid is not initialized");
  if (snapshot_stride < 1) fail(ErrorCode::Config, "snapshot stride must be >= 1");
  (void)num_steps();
}

DistributionField initial_condition(const PhaseGrid& grid, const ParamPoint& mu) {
  mu.validate();
  constexpr double k = 1.0;
  const double length = 2.0 * std::numbers::pi;
  const double amp = 8.0 / std::sqrt(2.0 * std::numbers::pi * mu.T);
  DistributionField f{grid, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size())), 0.0};
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    const double spatial = 1.0 + mu.alpha * std::cos(2.0 * k * std::numbers::pi * grid.x(ix) / length);
    for (std::size_t iv = 0; iv < grid.nv; ++iv) {
      const double v = grid.v(iv);
      const double beams = std::exp(-(v - mu.v0) * (v - mu.v0) / (2.0 * mu.T)) +
                           std::exp(-(v + mu.v0) * (v + mu.v0) / (2.0 * mu.T));
      f.values[static_cast<Eigen::Index>(grid.flat(ix, iv))] = amp * spatial * beams;
    }
  }
  return f;
}

FieldSolution solve_fields(const PhaseGrid& grid, std::span<const double> f) {
  Eigen::VectorXd rho = velocity_moment(grid, f);
  // poisson_solve inverts +d2/dx2; the negated density gives -d2phi/dx2 = rho - mean(rho).
  rho = -rho;
  FieldSolution s;
  s.phi = poisson_solve(std::span<const double>(rho.data(), grid.nx), grid.length()).values;
  s.e = electric_field(std::span<const double>(s.phi.data(), grid.nx), grid.length()).values;
  return s;
}

namespace {

constexpr double kWenoEps = 1e-6;

// Jiang-Shu WENO5 value at the right face of c from the left-biased stencil a..e.
inline double weno5(double a, double b, double c, double d, double e) {
  const double q0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
  const double q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
  const double q2 = (2.0 * c + 5.0 * d - e) / 6.0;
  const double t0 = a - 2.0 * b + c, s0 = a - 4.0 * b + 3.0 * c;
  const double t1 = b - 2.0 * c + d, s1 = b - d;
  const double t2 = c - 2.0 * d + e, s2 = 3.0 * c - 4.0 * d + e;
  const double b0 = 13.0 / 12.0 * t0 * t0 + 0.25 * s0 * s0;
  const double b1 = 13.0 / 12.0 * t1 * t1 + 0.25 * s1 * s1;
  const double b2 = 13.0 / 12.0 * t2 * t2 + 0.25 * s2 * s2;
  const double a0 = 0.1 / ((kWenoEps + b0) * (kWenoEps + b0));
  const double a1 = 0.6 / ((kWenoEps + b1) * (kWenoEps + b1));
  const double a2 = 0.3 / ((kWenoEps + b2) * (kWenoEps + b2));
  return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2);
}

}  // namespace

VlasovRhs::VlasovRhs(const PhaseGrid& grid, FomOptions options)
    : grid_(grid), options_(options), flux_(grid.size()), padded_(grid.nv + 6), v_part_(grid.size()) {
  if (grid.nx < 8 || grid.nv < 8) fail(ErrorCode::Config, "grid too small for WENO5 stencils");
}

void VlasovRhs::x_transport(const double* f, double* out) {
  const std::size_t nx = grid_.nx, nv = grid_.nv;
  auto row = [&](long j) {
    const long n = static_cast<long>(nx);
    return f + static_cast<std::size_t>(((j % n) + n) % n) * nv;
  };
  // flux_[ix * nv + iv] holds the flux through the face between ix and ix + 1.
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const long i = static_cast<long>(ix);
    const double* m2 = row(i - 2);
    const double* m1 = row(i - 1);
    const double* c0 = row(i);
    const double* p1 = row(i + 1);
    const double* p2 = row(i + 2);
    const double* p3 = row(i + 3);
    double* fl = flux_.data() + ix * nv;
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const double v = grid_.v(iv);
      if (v > 0.0) {
        fl[iv] = weno5(v * m2[iv], v * m1[iv], v * c0[iv], v * p1[iv], v * p2[iv]);
      } else if (v < 0.0) {
        fl[iv] = weno5(v * p3[iv], v * p2[iv], v * p1[iv], v * c0[iv], v * m1[iv]);
      } else {
        fl[iv] = 0.0;
      }
    }
  }
  const double inv_dx = 1.0 / grid_.dx;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double* right = flux_.data() + ix * nv;
    const double* left = flux_.data() + ((ix + nx - 1) % nx) * nv;
    double* o = out + ix * nv;
    for (std::size_t iv = 0; iv < nv; ++iv) o[iv] = -(right[iv] - left[iv]) * inv_dx;
  }
}

void VlasovRhs::v_transport(const double* f, std::span<const double> e, double* out) {
  const std::size_t nx = grid_.nx, nv = grid_.nv;
  const double inv_dv = 1.0 / grid_.dv;
  // padded_[iv + 3] = f(iv); three zero ghosts at either wall.
  std::vector<double> face(nv + 1);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double wind = e[ix];
    double* o = out + ix * nv;
    if (wind == 0.0) {
      std::fill(o, o + nv, 0.0);
      continue;
    }
    std::fill(padded_.begin(), padded_.end(), 0.0);
    for (std::size_t iv = 0; iv < nv; ++iv) padded_[iv + 3] = wind * f[ix * nv + iv];
    const double* p = padded_.data() + 3;
    // face[k] sits between nodes k - 1 and k.
    for (long k = 0; k <= static_cast<long>(nv); ++k) {
      const long j = k - 1;
      face[static_cast<std::size_t>(k)] =
          wind > 0.0 ? weno5(p[j - 2], p[j - 1], p[j], p[j + 1], p[j + 2])
                     : weno5(p[j + 3], p[j + 2], p[j + 1], p[j], p[j - 1]);
    }
    for (std::size_t iv = 0; iv < nv; ++iv) o[iv] = -(face[iv + 1] - face[iv]) * inv_dv;
  }
}

void VlasovRhs::evaluate(const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution* fields) {
  const std::size_t n = grid_.size();
  if (static_cast<std::size_t>(f.size()) != n) fail(ErrorCode::Config, "state size does not match grid");
  out.resize(static_cast<Eigen::Index>(n));
  FieldSolution local;
  FieldSolution& fs = fields ? *fields : local;
  if (options_.self_consistent_field) {
    fs = solve_fields(grid_, std::span<const double>(f.data(), n));
  } else {
    fs.phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_.nx));
    fs.e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid_.nx));
  }
  x_transport(f.data(), out.data());
  v_transport(f.data(), std::span<const double>(fs.e.data(), grid_.nx), v_part_.data());
  for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] += v_part_[i];
}

Eigen::VectorXd fom_rhs(const DistributionField& f, FomOptions options) {
  if (!f.all_finite()) {
    throw BlowupError(f.time, "non-finite distribution passed to the FOM right-hand side at t = " +
                                  std::to_string(f.time));
  }
  VlasovRhs rhs(f.grid, options);
  Eigen::VectorXd out;
  rhs.evaluate(f.values, out);
  return out;
}

double total_mass(const PhaseGrid& grid, const Eigen::VectorXd& f) { return f.sum() * grid.dx * grid.dv; }

std::size_t march_rk4(const FomConfig& config, const Eigen::VectorXd& f0, const RhsFunction& rhs,
                      SnapshotSink& sink) {
  config.validate();
  const std::size_t steps = config.num_steps();
  const double dt = config.dt;

  Eigen::VectorXd f = f0;
  Eigen::VectorXd k1, k2, k3, k4, stage;
  FieldSolution fields;
  std::size_t stored = 0;

  auto emit = [&](std::size_t step, double t) {
    sink.on_snapshot(step, t, f, fields.phi, fields.e.size() ? fields.e.cwiseAbs().maxCoeff() : 0.0);
    ++stored;
  };

  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    // The first stage sees the stored state, so its fields are the snapshot's fields.
    rhs(f, k1, &fields);
    if (n % config.snapshot_stride == 0) emit(n, t);
    stage = f + 0.5 * dt * k1;
    rhs(stage, k2, nullptr);
    stage = f + 0.5 * dt * k2;
    rhs(stage, k3, nullptr);
    stage = f + dt * k3;
    rhs(stage, k4, nullptr);
    f += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!f.allFinite()) {
      std::ostringstream os;
      os << "time march blew up in step " << n + 1 << "; last valid time t = " << t;
      throw BlowupError(t, os.str());
    }
  }
  rhs(f, k1, &fields);
  emit(steps, static_cast<double>(steps) * dt);
  return stored;
}

std::size_t fom_run_from(const FomConfig& config, const Eigen::VectorXd& f0, SnapshotSink& sink,
                         FomOptions options) {
  config.validate();
  VlasovRhs rhs(config.grid, options);
  return march_rk4(
      config, f0,
      [&rhs](const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution* fields) { rhs.evaluate(f, out, fields); },
      sink);
}

std::size_t fom_run(const FomConfig& config, const ParamPoint& mu, SnapshotSink& sink, FomOptions options) {
  if (!(config.grid == build_grid(config.grid.nx, config.grid.nv, mu.v0))) {
    fail(ErrorCode::Config, "FOM grid does not match v0 of the parameter point");
  }
  return fom_run_from(config, initial_condition(config.grid, mu).values, sink, options);
}

void TrajectoryRecorder::on_snapshot(std::size_t, double t, const Eigen::VectorXd& f, const Eigen::VectorXd& phi,
                                     double max_e) {
  out_.times.push_back(t);
  out_.snapshots_phi.push_back(phi);
  out_.max_e.push_back(max_e);
  if (keep_all_f_ || out_.snapshots_f.empty()) {
    out_.snapshots_f.push_back(f);
  } else {
    out_.snapshots_f.back() = f;
  }
}

FomTrajectory fom_run(const FomConfig& config, const ParamPoint& mu, FomOptions options) {
  FomTrajectory traj;
  traj.grid = config.grid;
  traj.mu = mu;
  traj.dt = config.dt;
  traj.stride = config.snapshot_stride;
  TrajectoryRecorder rec(traj, true);
  fom_run(config, mu, rec, options);
  return traj;
}

}  // namespace vrom
