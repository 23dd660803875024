/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "rom_offline.hpp"

#include <cmath>
#include <sstream>

#include "container.hpp"
#include "error.hpp"
#include "fom.hpp"

namespace vrom {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd linear_x_transport(const PhaseGrid& grid, const LinearDerivatives& d, const Eigen::VectorXd& f) {
  const std::size_t nv = grid.nv;
  Eigen::VectorXd out(f.size());
  // Each v row is a strided x line; the wind sign is fixed along it.
  for (std::size_t iv = 0; iv < nv; ++iv) {
    const double v = grid.v(iv);
    const StencilMatrix& dx = v > 0.0 ? d.dx_up : d.dx_down;
    dx.apply_strided(f.data() + iv, out.data() + iv, nv);
    for (std::size_t ix = 0; ix < grid.nx; ++ix) out[static_cast<Eigen::Index>(ix * nv + iv)] *= -v;
  }
  return out;
}

Eigen::VectorXd linear_v_transport(const PhaseGrid& grid, const LinearDerivatives& d, std::span<const double> e,
                                   const Eigen::VectorXd& f) {
  const std::size_t nv = grid.nv;
  Eigen::VectorXd out(f.size());
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    d.dv_central.apply(std::span<const double>(f.data() + ix * nv, nv), std::span<double>(out.data() + ix * nv, nv));
    out.segment(static_cast<Eigen::Index>(ix * nv), static_cast<Eigen::Index>(nv)) *= -e[ix];
  }
  return out;
}

LinearVlasovOperator::LinearVlasovOperator(const PhaseGrid& grid)
    : grid_(grid), d_(linear_derivative_matrices(grid)) {}

void LinearVlasovOperator::evaluate(const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution* fields) const {
  FieldSolution fs = solve_fields(grid_, std::span<const double>(f.data(), grid_.size()));
  out = linear_x_transport(grid_, d_, f) + linear_v_transport(grid_, d_, std::span<const double>(fs.e.data(), static_cast<std::size_t>(fs.e.size())), f);
  if (fields) *fields = std::move(fs);
}

Eigen::VectorXd LinearVlasovOperator::apply_with_field(const Eigen::VectorXd& f, std::span<const double> e) const {
  return linear_x_transport(grid_, d_, f) + linear_v_transport(grid_, d_, e, f);
}

Eigen::MatrixXd build_g1(const WindowBasis& basis, const PhaseGrid& grid, const LinearDerivatives& d) {
  const Eigen::Index nf = basis.phi_f.cols();
  Eigen::MatrixXd applied(basis.phi_f.rows(), nf);
  for (Eigen::Index k = 0; k < nf; ++k) applied.col(k) = linear_x_transport(grid, d, basis.phi_f.col(k));
  return basis.phi_f.transpose() * applied;
}

Eigen::MatrixXd build_g1(const WindowBasis& basis, const PhaseGrid& grid) {
  return build_g1(basis, grid, linear_derivative_matrices(grid));
}

std::vector<double> build_g2(const WindowBasis& basis, const PhaseGrid& grid, std::size_t max_bytes) {
  const std::size_t nf = basis.n_f(), np = basis.n_phi();
  const std::size_t bytes = nf * nf * np * sizeof(double);
  if (bytes > max_bytes) {
    std::ostringstream os;
    os << "tensor of window " << basis.window_index << " needs " << bytes << " bytes (cap " << max_bytes << ")";
    fail(ErrorCode::MemoryCap, os.str());
  }
  std::vector<double> g2(nf * np * nf, 0.0);
  if (np == 0) return g2;

  const auto d = linear_derivative_matrices(grid);
  const std::size_t nv = grid.nv;
  const auto nfi = static_cast<Eigen::Index>(nf);
  const auto nvi = static_cast<Eigen::Index>(nv);
  // dv_phi = (I (x) Dv) Phi_f, one v-derivative per basis column and x line.
  Eigen::MatrixXd dv_phi(basis.phi_f.rows(), nfi);
  for (Eigen::Index k = 0; k < nfi; ++k) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      d.dv_central.apply(std::span<const double>(basis.phi_f.col(k).data() + ix * nv, nv),
                         std::span<double>(dv_phi.col(k).data() + ix * nv, nv));
    }
  }
  // G2[i][j][k] = -sum_x E_j(x) * sum_v Phi_i(x,v) (Dv Phi_k)(x,v)
  Eigen::MatrixXd local(nfi, nfi);
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    const auto rows = static_cast<Eigen::Index>(ix * nv);
    local.noalias() = basis.phi_f.middleRows(rows, nvi).transpose() * dv_phi.middleRows(rows, nvi);
    for (std::size_t j = 0; j < np; ++j) {
      const double e = -basis.phi_e(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(j));
      for (std::size_t i = 0; i < nf; ++i) {
        double* dst = g2.data() + (i * np + j) * nf;
        for (std::size_t k = 0; k < nf; ++k) dst[k] += e * local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      }
    }
  }
  return g2;
}

ReducedPoisson build_reduced_poisson(const WindowBasis& basis, const PhaseGrid& grid) {
  const Eigen::Index np = basis.phi_phi.cols();
  const Eigen::Index nf = basis.phi_f.cols();
  ReducedPoisson rp;
  Eigen::MatrixXd neg_lap(basis.phi_phi.rows(), np);
  for (Eigen::Index j = 0; j < np; ++j) {
    neg_lap.col(j) = -spectral_laplacian(std::span<const double>(basis.phi_phi.col(j).data(), grid.nx), grid.length());
  }
  rp.l_hat = basis.phi_phi.transpose() * neg_lap;
  rp.l_hat = 0.5 * (rp.l_hat + rp.l_hat.transpose()).eval();
  if (np > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rp.l_hat, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-10 * hi)) {
      std::ostringstream os;
      os << "reduced Laplacian of window " << basis.window_index << " is singular (eigenvalues " << lo << " .. " << hi
         << "); a constant mode leaked into the potential basis";
      fail(ErrorCode::SingularReducedPoisson, os.str());
    }
  }
  Eigen::MatrixXd charge(basis.phi_phi.rows(), nf);
  for (Eigen::Index k = 0; k < nf; ++k) {
    Eigen::VectorXd rho =
        velocity_moment(grid, std::span<const double>(basis.phi_f.col(k).data(), grid.size()));
    charge.col(k) = rho.array() - rho.mean();
  }
  rp.m_hat = basis.phi_phi.transpose() * charge;
  return rp;
}

std::vector<Transition> build_transitions(const std::vector<WindowBasis>& bases, std::vector<std::string>* warnings) {
  std::vector<Transition> out;
  for (std::size_t m = 0; m + 1 < bases.size(); ++m) {
    const auto& a = bases[m];
    const auto& b = bases[m + 1];
    if (a.phi_f.rows() != b.phi_f.rows()) fail(ErrorCode::Config, "consecutive bases have different N_f");
    Transition t{b.phi_f.transpose() * a.phi_f, b.phi_phi.transpose() * a.phi_phi};
    if (warnings && t.t_f.size() > 0 && t.t_f.cwiseAbs().maxCoeff() < 1e-12) {
      warnings->push_back("window " + std::to_string(m) + " -> " + std::to_string(m + 1) +
                          ": bases are orthogonal, the handoff discards the whole state");
    }
    out.push_back(std::move(t));
  }
  return out;
}

WindowOperators build_operators_for(const WindowBasis& basis, const PhaseGrid& grid, const OfflineOptions& options) {
  WindowOperators ops;
  ops.n_f = basis.n_f();
  ops.n_phi = basis.n_phi();
  ops.g1 = build_g1(basis, grid);
  ops.g2 = build_g2(basis, grid, options.max_tensor_bytes);
  auto rp = build_reduced_poisson(basis, grid);
  ops.l_hat = std::move(rp.l_hat);
  ops.m_hat = std::move(rp.m_hat);
  return ops;
}

std::vector<WindowOperators> build_window_operators(const std::vector<WindowBasis>& bases, const PhaseGrid& grid,
                                                    const OfflineOptions& options, std::vector<std::string>* warnings) {
  std::vector<WindowOperators> ops;
  ops.reserve(bases.size());
  for (const auto& b : bases) ops.push_back(build_operators_for(b, grid, options));
  auto trans = build_transitions(bases, warnings);
  for (std::size_t m = 0; m < trans.size(); ++m) {
    ops[m].t_next = std::move(trans[m].t_f);
    ops[m].t_next_phi = std::move(trans[m].t_phi);
    ops[m].has_next = true;
  }
  return ops;
}

Eigen::VectorXd contract_g2(const WindowOperators& ops, const Eigen::VectorXd& phi_hat, const Eigen::VectorXd& f_hat) {
  const auto nf = static_cast<Eigen::Index>(ops.n_f), np = static_cast<Eigen::Index>(ops.n_phi);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nf);
  if (np == 0) return out;
  Eigen::Map<const RowMatrix> g2(ops.g2.data(), nf * np, nf);
  const Eigen::VectorXd gf = g2 * f_hat;  // index i * np + j
  Eigen::Map<const RowMatrix> by_i(gf.data(), nf, np);
  out.noalias() = by_i * phi_hat;
  return out;
}

// ---- persistence -----------------------------------------------------------

namespace {

void write_row_major(ContainerWriter& w, const Eigen::MatrixXd& m) {
  const RowMatrix r = m;
  w.write(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

void write_col_major(ContainerWriter& w, const Eigen::MatrixXd& m) {
  w.write(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Eigen::MatrixXd read_row_major(ContainerReader& r, std::uint64_t& offset, std::size_t rows, std::size_t cols) {
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  r.read(offset, std::span<double>(m.data(), rows * cols));
  offset += rows * cols;
  return m;
}

Eigen::MatrixXd read_col_major(ContainerReader& r, std::uint64_t& offset, std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  r.read(offset, std::span<double>(m.data(), rows * cols));
  offset += rows * cols;
  return m;
}

ContainerHeader grid_header(ContainerKind kind, const PhaseGrid& grid) {
  ContainerHeader h;
  h.kind = kind;
  h.nx = static_cast<std::uint32_t>(grid.nx);
  h.nv = static_cast<std::uint32_t>(grid.nv);
  h.mu = ParamPoint{0.0, 0.0, grid.v_max / 3.5};
  return h;
}

}  // namespace

std::string model_window_file(const char* stem, std::size_t m) {
  std::ostringstream os;
  os << stem << '_' << m << ".vrom";
  return os.str();
}

nlohmann::json write_basis_file(const std::filesystem::path& path, const PhaseGrid& grid, const WindowBasis& b) {
  auto h = grid_header(ContainerKind::Basis, grid);
  h.n_records = b.n_f();
  h.record_len = grid.size();
  h.aux = {b.n_f(), b.n_phi(), static_cast<std::uint64_t>(b.sv_f.size()), static_cast<std::uint64_t>(b.sv_phi.size())};
  ContainerWriter w(path, h);
  write_col_major(w, b.phi_f);
  write_col_major(w, b.phi_phi);
  write_col_major(w, b.phi_e);
  write_col_major(w, b.sv_f);
  write_col_major(w, b.sv_phi);
  const auto checksum = w.close();
  return {{"basis_file", path.filename().string()}, {"basis_checksum", checksum}};
}

nlohmann::json write_operators_file(const std::filesystem::path& path, const PhaseGrid& grid,
                                    const WindowOperators& ops) {
  auto h = grid_header(ContainerKind::Operators, grid);
  h.n_records = 1;
  h.layout = kLayoutRowMajor;
  h.aux = {ops.n_f, ops.n_phi, ops.has_next ? static_cast<std::uint64_t>(ops.t_next.rows()) : 0,
           ops.has_next ? static_cast<std::uint64_t>(ops.t_next_phi.rows()) : 0};
  ContainerWriter w(path, h);
  write_row_major(w, ops.g1);
  w.write(ops.g2);
  write_row_major(w, ops.l_hat);
  write_row_major(w, ops.m_hat);
  if (ops.has_next) {
    write_row_major(w, ops.t_next);
    write_row_major(w, ops.t_next_phi);
  }
  const auto checksum = w.close();
  return {{"operators_file", path.filename().string()},
          {"operators_checksum", checksum},
          {"tensor_bytes", ops.g2.size() * sizeof(double)}};
}

WindowBasis read_basis_file(const std::filesystem::path& path, std::size_t window_index, bool load_phi_f) {
  ContainerReader r(path);
  const auto& h = r.header();
  if (h.kind != ContainerKind::Basis) fail(ErrorCode::Format, path.string() + " is not a basis container");
  const std::size_t nf = h.aux[0], np = h.aux[1], nsf = h.aux[2], nsp = h.aux[3];
  const std::size_t n = static_cast<std::size_t>(h.nx) * h.nv;
  if (r.payload_doubles() != nf * n + 2 * np * h.nx + nsf + nsp) {
    fail(ErrorCode::Format, path.string() + ": payload size does not match header");
  }
  WindowBasis b;
  b.window_index = window_index;
  std::uint64_t off = 0;
  if (load_phi_f) {
    b.phi_f = read_col_major(r, off, n, nf);
  } else {
    b.phi_f.resize(0, static_cast<Eigen::Index>(nf));
    off += nf * n;
  }
  b.phi_phi = read_col_major(r, off, h.nx, np);
  b.phi_e = read_col_major(r, off, h.nx, np);
  b.sv_f = read_col_major(r, off, nsf, 1);
  b.sv_phi = read_col_major(r, off, nsp, 1);
  return b;
}

WindowOperators read_operators_file(const std::filesystem::path& path) {
  ContainerReader r(path);
  const auto& h = r.header();
  if (h.kind != ContainerKind::Operators) fail(ErrorCode::Format, path.string() + " is not an operators container");
  if (h.layout != kLayoutRowMajor) fail(ErrorCode::Format, path.string() + ": unsupported tensor layout");
  WindowOperators ops;
  ops.n_f = h.aux[0];
  ops.n_phi = h.aux[1];
  const std::size_t nf_next = h.aux[2], np_next = h.aux[3];
  const std::size_t nf = ops.n_f, np = ops.n_phi;
  ops.has_next = nf_next > 0;
  const std::uint64_t expected = nf * nf + nf * np * nf + np * np + np * nf + nf_next * nf + np_next * np;
  if (r.payload_doubles() != expected) fail(ErrorCode::Format, path.string() + ": payload size does not match header");
  std::uint64_t off = 0;
  ops.g1 = read_row_major(r, off, nf, nf);
  ops.g2.resize(nf * np * nf);
  r.read(off, ops.g2);
  off += ops.g2.size();
  ops.l_hat = read_row_major(r, off, np, np);
  ops.m_hat = read_row_major(r, off, np, nf);
  if (ops.has_next) {
    ops.t_next = read_row_major(r, off, nf_next, nf);
    ops.t_next_phi = read_row_major(r, off, np_next, np);
  }
  return ops;
}

nlohmann::json write_model_manifest(const std::filesystem::path& dir, const PhaseGrid& grid,
                                    const WindowPartition& partition, const std::vector<nlohmann::json>& windows,
                                    const nlohmann::json& build_config) {
  std::uint64_t tensor_bytes = 0;
  for (const auto& w : windows) tensor_bytes += w.at("tensor_bytes").get<std::uint64_t>();
  nlohmann::json j = {
      {"format", "vrom-model"},
      {"version", kFormatVersion},
      {"grid", grid_to_json(grid)},
      {"v0", grid.v_max / 3.5},
      {"boundaries", partition.boundaries},
      {"n_windows", partition.n_windows()},
      {"windows", windows},
      {"tensor_bytes", tensor_bytes},
      {"build", build_config},
  };
  write_json(dir / "manifest.json", j);
  return j;
}

nlohmann::json write_model(const std::filesystem::path& dir, const PhaseGrid& grid, const WindowPartition& partition,
                           const std::vector<WindowBasis>& bases, const std::vector<WindowOperators>& ops,
                           const nlohmann::json& build_config) {
  if (bases.size() != partition.n_windows() || ops.size() != bases.size()) {
    fail(ErrorCode::Config, "model has inconsistent window counts");
  }
  std::filesystem::create_directories(dir);
  std::vector<nlohmann::json> windows;
  for (std::size_t m = 0; m < bases.size(); ++m) {
    nlohmann::json w = {{"index", m}, {"n_f", bases[m].n_f()}, {"n_phi", bases[m].n_phi()}};
    w.update(write_basis_file(dir / model_window_file("basis", m), grid, bases[m]));
    w.update(write_operators_file(dir / model_window_file("operators", m), grid, ops[m]));
    windows.push_back(std::move(w));
  }
  return write_model_manifest(dir, grid, partition, windows, build_config);
}

}  // namespace vrom
