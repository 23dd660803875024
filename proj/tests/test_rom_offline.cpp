/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "container.hpp"
#include "rom_offline.hpp"
#include "rom_online.hpp"
#include "test_util.hpp"

using namespace vrom;
using vrom::test::error_code_of;

namespace {

/// Dense full-order operators of the linear discretization, assembled from the stencils.
struct DenseOps {
  Eigen::MatrixXd x_part;  ///< -(Dx_up (x) V+ + Dx_down (x) V-)
  Eigen::MatrixXd dv;      ///< Dv with zero ghosts

  explicit DenseOps(const PhaseGrid& g) {
    const int nx = static_cast<int>(g.nx), nv = static_cast<int>(g.nv);
    const auto up = vrom::test::periodic_stencil(nx, -3, {-2, 15, -60, 20, 30, -3}, 60 * g.dx);
    const auto down = vrom::test::periodic_stencil(nx, -2, {3, -30, -20, 60, -15, 2}, 60 * g.dx);
    Eigen::MatrixXd vp = Eigen::MatrixXd::Zero(nv, nv), vm = Eigen::MatrixXd::Zero(nv, nv);
    for (int j = 0; j < nv; ++j) {
      const double v = g.v(static_cast<std::size_t>(j));
      vp(j, j) = std::max(v, 0.0);
      vm(j, j) = std::min(v, 0.0);
    }
    x_part = -(vrom::test::kron(up, vp) + vrom::test::kron(down, vm));
    dv = vrom::test::wall_stencil(nv, -3, {-1, 9, -45, 0, 45, -9, 1}, 60 * g.dv);
  }

  Eigen::MatrixXd v_part(const Eigen::VectorXd& e) const {
    return -vrom::test::kron(Eigen::MatrixXd(e.asDiagonal()), dv);
  }
};

/// Orthonormal, mean-free potential basis built from random data.
Eigen::MatrixXd mean_free_basis(Eigen::Index nx, Eigen::Index n, unsigned seed) {
  Eigen::MatrixXd r = vrom::test::random_matrix(nx, n, seed);
  r.rowwise() -= r.colwise().mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(r);
  return qr.householderQ() * Eigen::MatrixXd::Identity(nx, n);
}

WindowBasis random_basis(const PhaseGrid& g, Eigen::Index nf, Eigen::Index np, unsigned seed) {
  WindowBasis b;
  b.phi_f = vrom::test::random_orthonormal(static_cast<Eigen::Index>(g.size()), nf, seed);
  b.phi_phi = mean_free_basis(static_cast<Eigen::Index>(g.nx), np, seed + 1);
  b.phi_e = electric_field_basis(g, b.phi_phi);
  return b;
}

Eigen::MatrixXd fourier_basis(const PhaseGrid& g, std::initializer_list<int> modes) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(g.nx), static_cast<Eigen::Index>(modes.size()));
  int c = 0;
  for (int k : modes) {
    for (std::size_t i = 0; i < g.nx; ++i)
      m(static_cast<Eigen::Index>(i), c) = k > 0 ? std::sin(k * g.x(i)) : std::cos(-k * g.x(i));
    m.col(c).normalize();
    ++c;
  }
  return m;
}

}  // namespace

TEST_SUITE("rom_offline") {

TEST_CASE("linear full-order operator matches the dense assembly") {
  const auto g = build_grid(16, 16, 1.0);
  DenseOps dense(g);
  LinearVlasovOperator op(g);
  const Eigen::VectorXd f = vrom::test::random_matrix(256, 1, 1);
  const Eigen::VectorXd e = vrom::test::random_matrix(16, 1, 2);
  const Eigen::VectorXd expect = dense.x_part * f + dense.v_part(e) * f;
  CHECK(vrom::test::rel(op.apply_with_field(f, {e.data(), 16}), expect) < 1e-13);
}

TEST_CASE("tensor oracle over random draws") {
  const auto g = build_grid(16, 16, 1.0);
  DenseOps dense(g);
  const auto b = random_basis(g, 5, 3, 7);
  const auto ops = build_operators_for(b, g);
  CHECK(ops.g2.size() == 5 * 3 * 5);
  double worst = 0.0;
  for (unsigned draw = 0; draw < 100; ++draw) {
    const Eigen::VectorXd fh = vrom::test::random_matrix(5, 1, 1000 + draw);
    const Eigen::VectorXd ph = vrom::test::random_matrix(3, 1, 2000 + draw);
    const Eigen::VectorXd f = b.phi_f * fh;
    const Eigen::VectorXd e = b.phi_e * ph;
    const Eigen::VectorXd brute = b.phi_f.transpose() * (dense.x_part * f + dense.v_part(e) * f);
    const Eigen::VectorXd fast = ops.g1 * fh + contract_g2(ops, ph, fh);
    worst = std::max(worst, vrom::test::rel(fast, brute));
  }
  CHECK(worst < 1e-12);

  SUBCASE("entrywise definition of the tensor") {
    for (Eigen::Index i = 0; i < 5; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        for (Eigen::Index k = 0; k < 5; ++k) {
          const double ref = (b.phi_f.col(i).transpose() * dense.v_part(b.phi_e.col(j)) * b.phi_f.col(k))(0, 0);
          CHECK(std::abs(ops.g2_at(i, j, k) - ref) < 1e-12 * (1.0 + std::abs(ref)));
        }
  }
}

TEST_CASE("g1 special cases") {
  const auto g = build_grid(16, 16, 1.0);
  DenseOps dense(g);
  WindowBasis cell;
  cell.phi_f = Eigen::MatrixXd::Zero(256, 1);
  const std::size_t idx = g.flat(5, 12);
  cell.phi_f(static_cast<Eigen::Index>(idx), 0) = 1.0;
  const auto g1 = build_g1(cell, g);
  CHECK(g1(0, 0) == doctest::Approx(dense.x_part(idx, idx)).epsilon(1e-13));

  // Central x-derivative variant: the reduced operator is skew-symmetric.
  const double w = 60 * g.dx;
  StencilMatrix central{g.nx, true, -3, {-1 / w, 9 / w, -45 / w, 0.0, 45 / w, -9 / w, 1 / w}};
  auto d = linear_derivative_matrices(g);
  d.dx_up = central;
  d.dx_down = central;
  WindowBasis rb;
  rb.phi_f = vrom::test::random_orthonormal(256, 6, 17);
  const auto skew = build_g1(rb, g, d);
  CHECK((skew + skew.transpose()).cwiseAbs().maxCoeff() < 1e-12 * skew.cwiseAbs().maxCoeff());
}

TEST_CASE("g2 special cases") {
  const auto g = build_grid(8, 8, 1.0);
  WindowBasis b;
  b.phi_f = Eigen::MatrixXd::Constant(64, 1, 1.0 / 8.0);
  b.phi_phi = Eigen::MatrixXd::Constant(8, 1, 1.0 / std::sqrt(8.0));
  b.phi_e = b.phi_phi;
  const auto g2 = build_g2(b, g);
  const auto dv = vrom::test::wall_stencil(8, -3, {-1, 9, -45, 0, 45, -9, 1}, 60 * g.dv);
  const double oracle = -(1.0 / 64.0) * (1.0 / std::sqrt(8.0)) * 8.0 * dv.sum();
  REQUIRE(g2.size() == 1);
  CHECK(g2[0] == doctest::Approx(oracle).epsilon(1e-13));

  auto rb = random_basis(build_grid(16, 16, 1.0), 4, 2, 3);
  rb.phi_e.col(1).setZero();
  const auto t = build_g2(rb, build_grid(16, 16, 1.0));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 4; ++k) CHECK(t[(i * 2 + 1) * 4 + k] == 0.0);

  CHECK(error_code_of([&] { build_g2(rb, build_grid(16, 16, 1.0), 100); }) == ErrorCode::MemoryCap);
}

TEST_CASE("reduced poisson") {
  const auto g = build_grid(16, 16, 1.0);
  WindowBasis b;
  b.phi_f = vrom::test::random_orthonormal(256, 3, 5);
  b.phi_phi = fourier_basis(g, {1});
  CHECK(build_reduced_poisson(b, g).l_hat(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  b.phi_phi = fourier_basis(g, {3});
  CHECK(build_reduced_poisson(b, g).l_hat(0, 0) == doctest::Approx(9.0).epsilon(1e-12));

  SUBCASE("lift-solve-project on a Laplacian-invariant basis") {
    b.phi_phi = fourier_basis(g, {1, -2, 3});
    b.phi_e = electric_field_basis(g, b.phi_phi);
    const auto rp = build_reduced_poisson(b, g);
    for (unsigned s = 0; s < 10; ++s) {
      const Eigen::VectorXd fh = vrom::test::random_matrix(3, 1, 60 + s);
      const Eigen::VectorXd f = b.phi_f * fh;
      const Eigen::VectorXd phih = rp.l_hat.llt().solve(rp.m_hat * fh);
      // Full solve of -phi'' = rho - mean(rho).
      Eigen::VectorXd rho = velocity_moment(g, {f.data(), 256});
      Eigen::VectorXd neg = -rho;
      const auto full = poisson_solve({neg.data(), 16}, g.length()).values;
      const Eigen::VectorXd projected = b.phi_phi * (b.phi_phi.transpose() * full);
      CHECK((b.phi_phi * phih - projected).norm() <= 1e-10 * std::max(1.0, projected.norm()));
    }
  }

  b.phi_phi = Eigen::MatrixXd::Constant(16, 1, 0.25);
  CHECK(error_code_of([&] { build_reduced_poisson(b, g); }) == ErrorCode::SingularReducedPoisson);
}

TEST_CASE("transitions") {
  const auto g = build_grid(16, 16, 1.0);
  const auto a = random_basis(g, 4, 2, 70);
  std::vector<std::string> warn;
  auto same = build_transitions({a, a}, &warn);
  REQUIRE(same.size() == 1);
  CHECK((same[0].t_f - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(warn.empty());

  WindowBasis left, right;
  left.phi_f = Eigen::MatrixXd::Zero(256, 2);
  right.phi_f = Eigen::MatrixXd::Zero(256, 2);
  left.phi_f(0, 0) = left.phi_f(1, 1) = 1.0;
  right.phi_f(10, 0) = right.phi_f(11, 1) = 1.0;
  left.phi_phi = right.phi_phi = Eigen::MatrixXd::Zero(16, 0);
  const auto zero = build_transitions({left, right}, &warn);
  CHECK(zero[0].t_f.cwiseAbs().maxCoeff() == 0.0);
  CHECK(warn.size() == 1);

  for (unsigned s = 0; s < 20; ++s) {
    const auto p = random_basis(g, 5, 2, 300 + s);
    const auto q = random_basis(g, 7, 3, 400 + s);
    const auto t = build_transitions({p, q});
    CHECK(t[0].t_f.rows() == 7);
    CHECK(t[0].t_f.cols() == 5);
    CHECK(Eigen::JacobiSVD<Eigen::MatrixXd>(t[0].t_f).singularValues()[0] <= 1.0 + 1e-12);
  }
}

TEST_CASE("model persistence") {
  vrom::test::TempDir dir("model");
  const auto g = build_grid(16, 16, 1.0);
  std::vector<WindowBasis> bases{random_basis(g, 4, 2, 1), random_basis(g, 3, 2, 2)};
  bases[0].window_index = 0;
  bases[1].window_index = 1;
  bases[0].sv_f = Eigen::VectorXd::LinSpaced(6, 6, 1);
  bases[1].sv_phi = Eigen::VectorXd::LinSpaced(2, 2, 1);
  const auto ops = build_window_operators(bases, g);
  const auto part = partition_uniform(1.0, 2);
  const auto manifest = write_model(dir.path, g, part, bases, ops, {{"note", "test"}});
  CHECK(manifest.at("n_windows") == 2);
  CHECK(manifest.at("tensor_bytes") == (4 * 4 * 2 + 3 * 3 * 2) * 8);

  const auto back = read_operators_file(dir.path / model_window_file("operators", 0));
  CHECK(back.n_f == 4);
  CHECK(back.has_next);
  CHECK((back.g1 - ops[0].g1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.g2 == ops[0].g2);
  CHECK((back.t_next - ops[0].t_next).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.m_hat - ops[0].m_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(read_operators_file(dir.path / model_window_file("operators", 1)).has_next);

  const auto bb = read_basis_file(dir.path / model_window_file("basis", 0), 0, true);
  CHECK((bb.phi_f - bases[0].phi_f).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bb.phi_e - bases[0].phi_e).cwiseAbs().maxCoeff() == 0.0);
  CHECK((bb.sv_f - bases[0].sv_f).cwiseAbs().maxCoeff() == 0.0);

  const auto model = RomModel::load(dir.path, true);
  CHECK(model.n_windows() == 2);
  CHECK((*model.phi_f(1) - bases[1].phi_f).cwiseAbs().maxCoeff() == 0.0);

  {
    std::fstream io(dir.path / model_window_file("operators", 1), std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(140);
    io.put('\x55');
  }
  CHECK(error_code_of([&] { RomModel::load(dir.path, true); }) == ErrorCode::ModelIntegrity);
  std::filesystem::remove(dir.path / model_window_file("operators", 1));
  CHECK(error_code_of([&] { RomModel::load(dir.path, false); }) == ErrorCode::ModelIntegrity);
}

}  // TEST_SUITE
