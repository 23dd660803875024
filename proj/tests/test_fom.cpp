/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fom.hpp"
#include "test_util.hpp"

using namespace vrom;
using vrom::test::error_code_of;

namespace {

struct Collect : SnapshotSink {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> f;
  void on_snapshot(std::size_t, double t, const Eigen::VectorXd& fv, const Eigen::VectorXd&, double) override {
    times.push_back(t);
    f.push_back(fv);
  }
};

double w_profile(double v) { return std::exp(-4.0 * v * v); }

}  // namespace

TEST_SUITE("fom") {

TEST_CASE("initial condition") {
  const ParamPoint mu{0.08, 0.001, 1.0};
  // Odd nv puts a node at v = 0.
  const auto g = build_grid(256, 257, 1.0);
  const auto f = initial_condition(g, mu);
  CHECK(g.x(0) == 0.0);
  CHECK(std::abs(g.v(128)) < 1e-15);
  const double closed = 8.0 / std::sqrt(0.16 * std::numbers::pi) * 1.001 * 2.0 * std::exp(-1.0 / 0.16);
  CHECK(f.at(0, 128) == doctest::Approx(closed).epsilon(1e-14));
  CHECK(f.at(0, 128) == doctest::Approx(0.04360925029166124).epsilon(1e-13));

  for (std::size_t i = 0; i < g.nx; i += 17)
    for (std::size_t j = 0; j < g.nv; ++j) CHECK(f.at(i, j) == doctest::Approx(f.at(i, g.nv - 1 - j)).epsilon(1e-13));

  const auto flat = initial_condition(build_grid(16, 32, 1.0), {0.09, 0.0, 1.0});
  for (std::size_t i = 1; i < 16; ++i)
    for (std::size_t j = 0; j < 32; ++j) CHECK(flat.at(i, j) == flat.at(0, j));

  CHECK(error_code_of([] { ParamPoint{-1.0, 0.001, 1.0}.validate(); }) == ErrorCode::Config);
}

TEST_CASE("right-hand side basics") {
  const auto g = build_grid(32, 32, 1.0);
  DistributionField zero{g, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size())), 0.0};
  CHECK(fom_rhs(zero).cwiseAbs().maxCoeff() == 0.0);

  auto uniform = initial_condition(g, {0.08, 0.0, 1.0});
  CHECK(fom_rhs(uniform).cwiseAbs().maxCoeff() < 1e-10 * uniform.values.cwiseAbs().maxCoeff());

  auto bad = uniform;
  bad.values[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK(error_code_of([&] { fom_rhs(bad); }) == ErrorCode::NumericalBlowup);
}

TEST_CASE("weno x-advection converges at fifth order") {
  double err[3];
  const std::size_t ns[3] = {64, 128, 256};
  for (int k = 0; k < 3; ++k) {
    const auto g = build_grid(ns[k], 64, 1.0);
    DistributionField f{g, Eigen::VectorXd(static_cast<Eigen::Index>(g.size())), 0.0};
    Eigen::VectorXd exact(f.values.size());
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.nv; ++j) {
        f.values[g.flat(i, j)] = std::sin(g.x(i)) * w_profile(g.v(j));
        exact[g.flat(i, j)] = -g.v(j) * std::cos(g.x(i)) * w_profile(g.v(j));
      }
    const auto rhs = fom_rhs(f, FomOptions{false});
    err[k] = (rhs - exact).cwiseAbs().maxCoeff();
  }
  MESSAGE("weno orders " << std::log2(err[0] / err[1]) << " " << std::log2(err[1] / err[2]));
  CHECK(std::log2(err[0] / err[1]) >= 4.5);
  CHECK(std::log2(err[1] / err[2]) >= 4.5);
}

TEST_CASE("rk4 converges at fourth order") {
  // y' = -y on every entry, solution exp(-t).
  FomConfig c;
  c.grid = build_grid(8, 8, 1.0);
  c.t_final = 1.0;
  const RhsFunction decay = [](const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution*) { out = -f; };
  double err[3];
  const double dts[3] = {0.1, 0.05, 0.025};
  for (int k = 0; k < 3; ++k) {
    c.dt = dts[k];
    Collect sink;
    march_rk4(c, Eigen::VectorXd::Ones(64), decay, sink);
    err[k] = std::abs(sink.f.back()[0] - std::exp(-1.0));
  }
  CHECK(std::log2(err[0] / err[1]) >= 3.9);
  CHECK(std::log2(err[1] / err[2]) >= 3.9);
}

TEST_CASE("snapshot schedule") {
  FomConfig c;
  c.grid = build_grid(16, 16, 1.0);
  c.t_final = 0.0;
  Collect s0;
  fom_run(c, {0.08, 0.001, 1.0}, s0);
  REQUIRE(s0.times.size() == 1);
  CHECK(s0.times[0] == 0.0);

  c.t_final = 0.025;
  c.snapshot_stride = 3;
  Collect s1;
  fom_run(c, {0.08, 0.001, 1.0}, s1);
  // steps 0, 3, 6, 9 and the final step 10
  REQUIRE(s1.times.size() == 5);
  CHECK(s1.times.back() == doctest::Approx(0.025));

  c.t_final = 0.0101;
  CHECK(error_code_of([&] { c.num_steps(); }) == ErrorCode::Config);
  c.t_final = 0.01;
  CHECK(error_code_of([&] { fom_run(c, {0.08, 0.001, 2.0}, s1); }) == ErrorCode::Config);
}

TEST_CASE("blowup reports the last valid time") {
  FomConfig c;
  c.grid = build_grid(8, 8, 1.0);
  c.t_final = 1.0;
  const RhsFunction ramp = [](const Eigen::VectorXd& f, Eigen::VectorXd& out, FieldSolution*) {
    out = Eigen::VectorXd::Ones(f.size());
    if (f[0] > 0.051) out[0] = std::numeric_limits<double>::quiet_NaN();
  };
  Collect sink;
  try {
    march_rk4(c, Eigen::VectorXd::Zero(64), ramp, sink);
    FAIL("expected a blowup");
  } catch (const BlowupError& e) {
    CHECK(e.code() == ErrorCode::NumericalBlowup);
    CHECK(e.last_valid_time() >= 0.05 - 1e-12);
    CHECK(e.last_valid_time() < 0.06);
    CHECK(std::string(e.what()).find("last valid time") != std::string::npos);
  }
}

TEST_CASE("mass conservation and two-stream growth on a coarse grid") {
  FomConfig c;
  c.grid = build_grid(64, 64, 1.0);
  c.t_final = 8.0;
  c.snapshot_stride = 400;
  const ParamPoint mu{0.08, 0.001, 1.0};
  const auto traj = fom_run(c, mu, FomOptions{});
  REQUIRE(traj.size() == 9);
  const double m0 = total_mass(c.grid, traj.snapshots_f.front());
  for (const auto& f : traj.snapshots_f) CHECK(std::abs(total_mass(c.grid, f) - m0) / m0 < 1e-10);
  // Field amplitude at t = 1 is still at its seed level; by t = 8 the instability has developed.
  CHECK(traj.max_e[8] > 50.0 * traj.max_e[1]);
}

}  // TEST_SUITE
