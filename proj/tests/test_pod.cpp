/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include <doctest.h>

#include <cmath>

#include "pod.hpp"
#include "test_util.hpp"

using namespace vrom;
using vrom::test::error_code_of;

namespace {

/// Largest principal angle (radians) between the column spans of two orthonormal matrices.
double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  // Sine form: accurate for small angles, unlike acos of the cosines.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b - a * (a.transpose() * b));
  return std::asin(std::min(1.0, svd.singularValues().maxCoeff()));
}

}  // namespace

TEST_SUITE("pod") {

TEST_CASE("rank one and duplicated columns") {
  const Eigen::VectorXd u = vrom::test::random_matrix(40, 1, 5);
  const auto r1 = pod_basis(u, TruncationRule::energy_fraction(0.9999));
  REQUIRE(r1.n == 1);
  CHECK(r1.singular_values[0] == doctest::Approx(u.norm()).epsilon(1e-13));
  CHECK(std::abs(std::abs(r1.basis.col(0).dot(u)) - u.norm()) < 1e-12);

  Eigen::MatrixXd uu(40, 2);
  uu << u, u;
  for (double e : {0.5, 0.9, 0.999999}) CHECK(pod_basis(uu, TruncationRule::energy_fraction(e)).n == 1);
  CHECK(pod_basis(uu, TruncationRule::energy_fraction(0.9)).singular_values[0] ==
        doctest::Approx(std::sqrt(2.0) * u.norm()).epsilon(1e-13));
}

TEST_CASE("full-rank reconstruction") {
  const auto u = vrom::test::random_matrix(50, 20, 11);
  const auto r = pod_basis(u, TruncationRule::energy_fraction(1.0));
  CHECK(r.n == 20);
  CHECK((u - r.basis * (r.basis.transpose() * u)).norm() / u.norm() < 1e-12);
}

TEST_CASE("eckart-young optimality") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const auto u = vrom::test::random_matrix(30, 10, 100 + seed);
    // Oracle singular values from an independent dense SVD.
    Eigen::BDCSVD<Eigen::MatrixXd> ref(u);
    const auto s = ref.singularValues();
    for (std::size_t r = 1; r < 10; ++r) {
      const auto p = pod_basis(u, TruncationRule::fixed(r));
      REQUIRE(p.n == r);
      const double err2 = (u - p.basis * (p.basis.transpose() * u)).norm();
      const double tail = s.tail(static_cast<Eigen::Index>(10 - r)).norm();
      CHECK(std::abs(err2 - tail) < 1e-10 * s[0]);
      const double spec = Eigen::JacobiSVD<Eigen::MatrixXd>(u - p.basis * (p.basis.transpose() * u))
                              .singularValues()[0];
      CHECK(std::abs(spec - s[static_cast<Eigen::Index>(r)]) < 1e-10 * s[0]);
    }
  }
}

TEST_CASE("orthonormality and sign convention") {
  const auto u = vrom::test::random_matrix(200, 30, 21);
  const auto p = pod_basis(u, TruncationRule::fixed(12));
  CHECK(orthonormality_defect(p.basis) < 1e-10);
  for (Eigen::Index c = 0; c < p.basis.cols(); ++c) {
    Eigen::Index k;
    p.basis.col(c).cwiseAbs().maxCoeff(&k);
    CHECK(p.basis(k, c) >= 0.0);
  }
  const auto again = pod_basis(u, TruncationRule::fixed(12));
  CHECK((again.basis - p.basis).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("energy rule") {
  // Columns with prescribed singular values 10, 1, 0.1.
  const auto q = vrom::test::random_orthonormal(20, 3, 31);
  const auto w = vrom::test::random_orthonormal(3, 3, 32);
  const Eigen::MatrixXd u = q * Eigen::Vector3d(10, 1, 0.1).asDiagonal() * w.transpose();
  CHECK(pod_basis(u, TruncationRule::energy_fraction(0.98)).n == 1);
  CHECK(pod_basis(u, TruncationRule::energy_fraction(0.9995)).n == 2);
  CHECK(pod_basis(u, TruncationRule::energy_fraction(0.99999)).n == 3);
  CHECK(pod_basis(u, TruncationRule::fixed(0)).n == 0);
  CHECK(pod_basis(u, TruncationRule::fixed(0)).basis.cols() == 0);
  CHECK(pod_basis(u, TruncationRule::fixed(9)).n == 3);
}

TEST_CASE("singular value ratio rule") {
  const auto q = vrom::test::random_orthonormal(20, 3, 33);
  const auto w = vrom::test::random_orthonormal(3, 3, 34);
  const Eigen::MatrixXd u = q * Eigen::Vector3d(10, 1, 0.1).asDiagonal() * w.transpose();
  CHECK(pod_basis(u, TruncationRule::sv_ratio(0.5)).n == 1);
  CHECK(pod_basis(u, TruncationRule::sv_ratio(0.05)).n == 2);
  CHECK(pod_basis(u, TruncationRule::sv_ratio(1e-3)).n == 3);
  CHECK(pod_basis(u, TruncationRule::sv_ratio(1e-3, 2)).n == 2);
  // Never past the numerical rank.
  const Eigen::MatrixXd rank1 = q.col(0) * Eigen::RowVector3d(1, 2, 3);
  CHECK(pod_basis(rank1, TruncationRule::sv_ratio(1e-30)).n == 1);
  CHECK(error_code_of([] { TruncationRule::sv_ratio(0.0).validate(); }) == ErrorCode::Config);
  CHECK(error_code_of([] { TruncationRule::sv_ratio(1.0).validate(); }) == ErrorCode::Config);
}

TEST_CASE("errors") {
  CHECK(error_code_of([] { pod_basis(Eigen::MatrixXd::Zero(10, 3), TruncationRule::fixed(2)); }) ==
        ErrorCode::NoBasis);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Ones(4, 2);
  nan(1, 1) = std::nan("");
  CHECK(error_code_of([&] { pod_basis(nan, TruncationRule::fixed(1)); }) == ErrorCode::Config);
  CHECK(error_code_of([] { TruncationRule::energy_fraction(1.5).validate(); }) == ErrorCode::Config);
  CHECK(error_code_of([] { TruncationRule::energy_fraction(0.0).validate(); }) == ErrorCode::Config);
}

TEST_CASE("window bases") {
  const auto g = build_grid(16, 16, 1.0);
  SUBCASE("identical snapshots give one mode") {
    const Eigen::VectorXd f = vrom::test::random_matrix(256, 1, 41);
    SnapshotMatrices s{f.replicate(1, 6), vrom::test::random_matrix(16, 1, 42).replicate(1, 6)};
    const auto b = build_window_basis(0, s, g, TruncationRule::energy_fraction(0.9999),
                                      TruncationRule::energy_fraction(0.9999));
    CHECK(b.n_f() == 1);
    CHECK(b.n_phi() == 1);
  }
  SUBCASE("two-mode data recovers the span") {
    const auto modes = vrom::test::random_orthonormal(256, 2, 43);
    Eigen::MatrixXd u(256, 40);
    for (int k = 0; k < 40; ++k) {
      const double t = 0.1 * k;
      u.col(k) = std::cos(t) * modes.col(0) + 0.3 * std::sin(2 * t) * modes.col(1);
    }
    SnapshotMatrices s{u, vrom::test::random_matrix(16, 3, 44)};
    const auto b = build_window_basis(3, s, g, TruncationRule::energy_fraction(0.999999),
                                      TruncationRule::fixed(2));
    CHECK(b.window_index == 3);
    REQUIRE(b.n_f() == 2);
    CHECK(max_principal_angle(b.phi_f, modes) < 1e-10);
    CHECK(orthonormality_defect(b.phi_f) < 1e-12);
  }
  SUBCASE("electric-field basis is the derivative of the potential basis") {
    Eigen::MatrixXd phi(16, 1);
    for (std::size_t i = 0; i < 16; ++i) phi(static_cast<Eigen::Index>(i), 0) = std::sin(2 * g.x(i));
    const auto e = electric_field_basis(g, phi);
    for (std::size_t i = 0; i < 16; ++i)
      CHECK(e(static_cast<Eigen::Index>(i), 0) == doctest::Approx(-2 * std::cos(2 * g.x(i))).epsilon(1e-12));
  }
}

}  // TEST_SUITE
