/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "trajectory_io.hpp"

#include "error.hpp"

namespace vrom {

std::filesystem::path sidecar_path(const std::filesystem::path& container) {
  return container.string() + ".json";
}

std::size_t stored_snapshot_count(const FomConfig& config) {
  const std::size_t steps = config.num_steps();
  // steps 0, stride, 2*stride, ... below steps, plus the final step
  return (steps + config.snapshot_stride - 1) / config.snapshot_stride + 1;
}

namespace {

ContainerHeader trajectory_header(const FomConfig& c, const ParamPoint& mu) {
  ContainerHeader h;
  h.kind = ContainerKind::Trajectory;
  h.nx = static_cast<std::uint32_t>(c.grid.nx);
  h.nv = static_cast<std::uint32_t>(c.grid.nv);
  h.stride = static_cast<std::uint32_t>(c.snapshot_stride);
  h.dt = c.dt;
  h.mu = mu;
  h.record_len = c.grid.size();
  h.aux[0] = c.num_steps();
  return h;
}

}  // namespace

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path, const FomConfig& config,
                                   const ParamPoint& mu)
    : path_(path), config_(config), mu_(mu), writer_(path, trajectory_header(config, mu)) {}

void TrajectoryWriter::on_snapshot(std::size_t, double t, const Eigen::VectorXd& f, const Eigen::VectorXd& phi,
                                   double max_e) {
  writer_.write(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())));
  phi_.insert(phi_.end(), phi.data(), phi.data() + phi.size());
  times_.push_back(t);
  max_e_.push_back(max_e);
}

nlohmann::json TrajectoryWriter::finish(double wall_seconds) {
  writer_.write(phi_);
  writer_.write(times_);
  writer_.write(max_e_);
  writer_.header().n_records = times_.size();
  const std::string checksum = writer_.close();
  nlohmann::json j = {
      {"format", "vrom-trajectory"},
      {"file", path_.filename().string()},
      {"checksum", checksum},
      {"mu", mu_to_json(mu_)},
      {"grid", grid_to_json(config_.grid)},
      {"dt", config_.dt},
      {"t_final", config_.t_final},
      {"stride", config_.snapshot_stride},
      {"n_snapshots", times_.size()},
      {"times", times_},
      {"wall_seconds", wall_seconds},
  };
  write_json(sidecar_path(path_), j);
  return j;
}

TrajectoryFile::TrajectoryFile(const std::filesystem::path& path, bool verify_checksum) : reader_(path) {
  const auto& h = reader_.header();
  if (h.kind != ContainerKind::Trajectory) fail(ErrorCode::Format, path.string() + " is not a trajectory container");
  mu_ = h.mu;
  grid_ = build_grid(h.nx, h.nv, mu_.v0);
  dt_ = h.dt;
  stride_ = h.stride;
  const std::uint64_t n = h.n_records;
  const std::uint64_t expected = n * (grid_.size() + grid_.nx + 2);
  if (reader_.payload_doubles() != expected) {
    fail(ErrorCode::Format, path.string() + ": payload size does not match header");
  }
  times_.resize(n);
  max_e_.resize(n);
  const std::uint64_t tail = n * (grid_.size() + grid_.nx);
  reader_.read(tail, times_);
  reader_.read(tail + n, max_e_);
  if (verify_checksum) {
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
      const auto j = read_json(side);
      if (j.at("checksum").get<std::string>() != file_checksum(path)) {
        fail(ErrorCode::ModelIntegrity, "checksum mismatch for " + path.string());
      }
    }
  }
}

Eigen::VectorXd TrajectoryFile::f(std::size_t i) {
  if (i >= times_.size()) fail(ErrorCode::OutOfRange, "snapshot index out of range");
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid_.size()));
  reader_.read(i * grid_.size(), std::span<double>(out.data(), grid_.size()));
  return out;
}

Eigen::VectorXd TrajectoryFile::phi(std::size_t i) {
  if (i >= times_.size()) fail(ErrorCode::OutOfRange, "snapshot index out of range");
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid_.nx));
  reader_.read(times_.size() * grid_.size() + i * grid_.nx, std::span<double>(out.data(), grid_.nx));
  return out;
}

}  // namespace vrom
