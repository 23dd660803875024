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

#include "fom.hpp"
#include "rom_offline.hpp"
#include "rom_online.hpp"
#include "test_util.hpp"

using namespace vrom;
using vrom::test::error_code_of;

namespace {

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

RomModel single_window(const PhaseGrid& g, const WindowBasis& b, double t_final) {
  auto ops = build_window_operators({b}, g);
  return RomModel(g, partition_uniform(t_final, 1), {b}, std::move(ops));
}

struct Store : SnapshotSink {
  std::vector<Eigen::VectorXd> f, phi;
  void on_snapshot(std::size_t, double, const Eigen::VectorXd& fv, const Eigen::VectorXd& p, double) override {
    f.push_back(fv);
    phi.push_back(p);
  }
};

}  // namespace

TEST_SUITE("rom_online") {

TEST_CASE("full-basis galerkin reproduces the linear reference") {
  const auto g = build_grid(16, 16, 1.0);
  const ParamPoint mu{0.08, 0.0025, 1.0};
  FomConfig c;
  c.grid = g;
  c.t_final = 0.25;
  LinearVlasovOperator op(g);
  Store ref;
  march_rk4(c, initial_condition(g, mu).values,
            [&](const Eigen::VectorXd& f, Eigen::VectorXd& o, FieldSolution* fs) { op.evaluate(f, o, fs); }, ref);
  Eigen::MatrixXd uf(256, static_cast<Eigen::Index>(ref.f.size())), up(16, static_cast<Eigen::Index>(ref.f.size()));
  for (std::size_t i = 0; i < ref.f.size(); ++i) {
    uf.col(static_cast<Eigen::Index>(i)) = ref.f[i];
    up.col(static_cast<Eigen::Index>(i)) = ref.phi[i];
  }
  const auto b = build_window_basis(0, {uf, up}, g, TruncationRule::energy_fraction(1.0),
                                    TruncationRule::energy_fraction(1.0));
  const auto model = single_window(g, b, c.t_final);
  const auto traj = rom_run(model, mu);
  const auto rec = reconstruct(traj, model, c.t_final);
  CHECK(vrom::test::rel(rec.values, ref.f.back()) < 1e-8);
  CHECK(traj.full_order_ops_in_loop == 0);
}

TEST_CASE("initial projection") {
  const auto g = build_grid(16, 16, 1.0);
  const ParamPoint mu{0.09, 0.002, 1.0};
  const auto f0 = initial_condition(g, mu).values;
  auto b = random_basis(g, 4, 2, 3);
  const auto model = single_window(g, b, 1.0);
  const auto s = rom_init(model, mu);
  CHECK(s.t == 0.0);
  CHECK(vrom::test::rel(reconstruct(s, model).values, b.phi_f * (b.phi_f.transpose() * f0)) < 1e-13);

  Eigen::MatrixXd withic(256, 3);
  withic.col(0) = f0.normalized();
  withic.rightCols(2) = vrom::test::random_matrix(256, 2, 5);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(withic);
  WindowBasis ic;
  ic.phi_f = qr.householderQ() * Eigen::MatrixXd::Identity(256, 3);
  if (ic.phi_f.col(0).dot(f0) < 0) ic.phi_f.col(0) *= -1.0;
  ic.phi_phi = b.phi_phi;
  ic.phi_e = b.phi_e;
  const auto m2 = single_window(g, ic, 1.0);
  const auto s2 = rom_init(m2, mu);
  CHECK(s2.f_hat[0] == doctest::Approx(f0.norm()).epsilon(1e-12));
  CHECK(std::abs(s2.f_hat[1]) < 1e-12 * f0.norm());
  CHECK(std::abs(s2.f_hat[2]) < 1e-12 * f0.norm());

  CHECK(project(b.phi_f, Eigen::VectorXd::Zero(256)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(error_code_of([&] { rom_init(model, {0.09, 0.002, 2.0}); }) == ErrorCode::Config);
}

TEST_CASE("reduced right-hand side") {
  const auto g = build_grid(16, 16, 1.0);
  const auto b = random_basis(g, 5, 3, 11);
  const auto ops = build_operators_for(b, g);
  ReducedPoissonSolver poisson(ops);

  Eigen::VectorXd phi;
  CHECK(rom_rhs(Eigen::VectorXd::Zero(5), ops, poisson, &phi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(phi.cwiseAbs().maxCoeff() == 0.0);

  // Lift, evaluate the full linear operator with the reduced field, project.
  LinearVlasovOperator op(g);
  for (unsigned s = 0; s < 10; ++s) {
    const Eigen::VectorXd fh = vrom::test::random_matrix(5, 1, 900 + s);
    const Eigen::VectorXd ph = ops.l_hat.llt().solve(ops.m_hat * fh);
    const Eigen::VectorXd e = b.phi_e * ph;
    const Eigen::VectorXd brute = b.phi_f.transpose() * op.apply_with_field(b.phi_f * fh, {e.data(), 16});
    RomState st{0, fh, {}, 0.0};
    CHECK(vrom::test::rel(rom_rhs(st, ops), brute) < 1e-12);
  }

  WindowBasis nophi = b;
  nophi.phi_phi.resize(16, 0);
  nophi.phi_e.resize(16, 0);
  const auto ops0 = build_operators_for(nophi, g);
  const Eigen::VectorXd fh = vrom::test::random_matrix(5, 1, 77);
  RomState st{0, fh, {}, 0.0};
  CHECK(vrom::test::rel(rom_rhs(st, ops0), ops0.g1 * fh) < 1e-15);

  RomState wrong{0, Eigen::VectorXd::Zero(4), {}, 0.0};
  CHECK(error_code_of([&] { rom_rhs(wrong, ops); }) == ErrorCode::Config);
}

TEST_CASE("windows, hand-offs and instrumentation") {
  const auto g = build_grid(16, 16, 1.0);
  const ParamPoint mu{0.08, 0.001, 1.0};
  const auto b = random_basis(g, 6, 3, 21);
  auto b1 = b;
  b1.window_index = 1;
  const auto one = single_window(g, b, 0.5);
  const auto ops = build_window_operators({b, b1}, g);
  const RomModel two(g, partition_uniform(0.5, 2), {b, b1}, ops);

  RomOptions opt;
  opt.check_handoff = true;
  const auto t1 = rom_run(one, mu);
  const auto t2 = rom_run(two, mu, opt);
  REQUIRE(t1.times.size() == 201);
  REQUIRE(t2.times.size() == 201);
  CHECK(t2.handoff_times.size() == 1);
  CHECK(t2.handoff_times[0] == doctest::Approx(0.25));
  CHECK(t2.windows[99] == 0);
  CHECK(t2.windows[100] == 1);
  CHECK(t2.handoff_jumps[0] < 1e-12);
  CHECK(t2.handoff_residuals[0] < 1e-12);
  CHECK(vrom::test::rel(t2.f_hat.back(), t1.f_hat.back()) < 1e-12);
  CHECK(t1.full_order_ops_in_loop == 0);
  // The optional hand-off check is the only full-order work and it is counted.
  CHECK(t2.full_order_ops_in_loop == 4);
  CHECK(t1.max_e[0] == doctest::Approx(reduced_max_e(b.phi_e, t1.phi_hat[0])));

  RomOptions bad;
  bad.dt = 0.003;
  CHECK(error_code_of([&] { rom_run(two, mu, bad); }) == ErrorCode::Config);
  RomOptions late;
  late.t_final = 0.75;
  CHECK(error_code_of([&] { rom_run(two, mu, late); }) == ErrorCode::OutOfRange);
}

TEST_CASE("reconstruction") {
  const auto g = build_grid(16, 16, 1.0);
  const auto b = random_basis(g, 4, 2, 31);
  const auto model = single_window(g, b, 0.1);
  RomState s{0, Eigen::VectorXd::Unit(4, 2), {}, 0.0};
  CHECK((reconstruct(s, model).values - b.phi_f.col(2)).cwiseAbs().maxCoeff() == 0.0);

  const auto traj = rom_run(model, {0.08, 0.001, 1.0});
  const auto fields = reconstruct(traj, model, std::vector<double>{0.0, 0.05, 0.1});
  CHECK(fields.size() == 3);
  CHECK(fields[1].time == doctest::Approx(0.05));
  CHECK(error_code_of([&] { reconstruct(traj, model, 0.2); }) == ErrorCode::OutOfRange);
  CHECK(error_code_of([&] { reconstruct(traj, model, 0.0512); }) == ErrorCode::OutOfRange);

  vrom::test::TempDir dir("romtraj");
  write_rom_trajectory(dir.path / "r.vrom", dir.path / "r.csv", traj, g, {0.08, 0.001, 1.0}, 0.0025);
  std::ifstream csv(dir.path / "r.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == traj.times.size() + 1);
}

TEST_CASE("blowup in the reduced march") {
  const auto g = build_grid(16, 16, 1.0);
  const auto b = random_basis(g, 3, 2, 41);
  auto ops = build_window_operators({b}, g);
  ops[0].g1 = 1000.0 * Eigen::MatrixXd::Identity(3, 3);
  const RomModel model(g, partition_uniform(1.0, 1), {b}, ops);
  try {
    rom_run(model, {0.08, 0.001, 1.0});
    FAIL("expected a blowup");
  } catch (const BlowupError& e) {
    CHECK(e.last_valid_time() > 0.0);
    CHECK(e.last_valid_time() < 1.0);
  }
}

}  // TEST_SUITE
