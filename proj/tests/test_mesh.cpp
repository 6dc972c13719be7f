#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pqobst/errors.hpp"
#include "pqobst/mesh.hpp"

using namespace pqobst;

TEST_CASE("mesh counts and measures") {
  const Mesh m1 = make_mesh(1, {{0.0, 1.0}}, {4});
  CHECK(m1.num_nodes() == 5);
  CHECK(m1.num_cells() == 4);
  for (int c = 0; c < 4; ++c) CHECK(m1.cell(c).measure == doctest::Approx(0.25).epsilon(1e-15));

  const Mesh m2 = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {2, 2});
  CHECK(m2.num_nodes() == 9);
  CHECK(m2.num_cells() == 8);
  for (int c = 0; c < 8; ++c) CHECK(m2.cell(c).measure == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(m2.interior_nodes().size() == 1);

  const Mesh m3 = make_mesh(2, {{0.0, 2.0}, {0.0, 3.0}}, {7, 5});
  CHECK(integrate_cells(m3, Eigen::VectorXd::Ones(m3.num_cells())) == doctest::Approx(6.0).epsilon(1e-12));

  CHECK_THROWS_AS(make_mesh(1, {{1.0, 1.0}}, {4}), InvalidArgument);
  CHECK_THROWS_AS(make_mesh(1, {{0.0, 1.0}}, {1}), InvalidArgument);
  CHECK_THROWS_AS(make_mesh(3, {{0.0, 1.0}}, {4}), InvalidArgument);
}

TEST_CASE("cell gradients") {
  const Mesh m = make_mesh(2, {{-1.0, 2.0}, {0.0, 1.0}}, {5, 4});
  const CellField g = cell_gradient(m, interpolate(m, [](const Vec& x) { return 2 * x(0) - x(1); }));
  for (int c = 0; c < m.num_cells(); ++c) {
    CHECK(g(c, 0) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(g(c, 1) == doctest::Approx(-1.0).epsilon(1e-13));
  }
  CHECK(cell_gradient(m, NodalField::Constant(m.num_nodes(), 3.0)).cwiseAbs().maxCoeff() == 0.0);

  const Mesh m1 = make_mesh(1, {{0.0, 1.0}}, {4});
  NodalField hat = NodalField::Zero(5);
  hat(2) = 1.0;
  const CellField gh = cell_gradient(m1, hat);
  CHECK(gh(1, 0) == doctest::Approx(4.0));
  CHECK(gh(2, 0) == doctest::Approx(-4.0));
  CHECK(gh(0, 0) == 0.0);
}

TEST_CASE("hat pairing") {
  const Mesh m = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {2, 2});
  CellField c(m.num_cells(), 2);
  c.rowwise() = Eigen::RowVector2d(0.3, -1.2);
  CHECK(std::abs(hat_pairing(m, c)(4)) < 1e-15);

  // sigma = centroid, div sigma = 2: the centre hat has support area 6 * 0.125.
  CellField s(m.num_cells(), 2);
  for (int k = 0; k < m.num_cells(); ++k) s.row(k) = m.centroid(k).transpose();
  const NodalField mi = hat_pairing(m, s);
  CHECK(mi(4) == doctest::Approx(-2.0 * (6 * 0.125) / 3.0).epsilon(1e-14));

  // Integration by parts against boundary-vanishing fields.
  const Mesh big = make_mesh(2, {{0.0, 1.0}, {0.0, 2.0}}, {6, 5});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  CellField sig(big.num_cells(), 2);
  for (int k = 0; k < big.num_cells(); ++k) sig.row(k) << nd(rng), nd(rng);
  NodalField w = NodalField::Zero(big.num_nodes());
  for (int i : big.interior_nodes()) w(i) = nd(rng);
  const double lhs = w.dot(hat_pairing(big, sig));
  const double rhs = integrate_cells(big, cell_dot(sig, cell_gradient(big, w)));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("integration and interpolation") {
  const Mesh m = make_mesh(1, {{0.0, 1.0}}, {4});
  const NodalField x = interpolate(m, [](const Vec& p) { return p(0); });
  CHECK((x - (Eigen::VectorXd(5) << 0, .25, .5, .75, 1).finished()).norm() < 1e-15);
  CHECK(interpolate(m, [](const Vec&) { return 0.0; }).norm() == 0.0);
  CHECK_THROWS_AS(interpolate(m, [](const Vec&) { return std::nan(""); }), InvalidArgument);

  const Mesh m5 = make_mesh(1, {{-1.0, 1.0}}, {4});
  const NodalField psi = interpolate(m5, [](const Vec& p) { return 0.25 - p(0) * p(0); });
  CHECK((psi - (Eigen::VectorXd(5) << -0.75, 0, 0.25, 0, -0.75).finished()).norm() < 1e-15);

  const Mesh sq = make_mesh(2, {{0.0, 2.0}, {0.0, 1.0}}, {3, 3});
  const double c = 1.7;
  CHECK(integrate_cells(sq, Eigen::VectorXd::Constant(sq.num_cells(), c)) == doctest::Approx(2 * c).epsilon(1e-13));
  const CellField g = cell_gradient(sq, interpolate(sq, [](const Vec& p) { return p(0) + 3 * p(1); }));
  Eigen::VectorXd half_sq = 0.5 * g.rowwise().squaredNorm();
  CHECK(integrate_cells(sq, half_sq) == doctest::Approx(2.0 * 5.0).epsilon(1e-12));
}

TEST_CASE("datum normalization") {
  const Mesh m = make_mesh(1, {{0.0, 1.0}}, {4});
  CHECK((normalize_datum(m, NodalField::Zero(5), NodalField::Constant(5, 0.5)).array() == 0.5).all());
  const NodalField up = NodalField::LinSpaced(5, 1, 2);
  CHECK(normalize_datum(m, up, NodalField::Zero(5)) == up);

  const Mesh m5 = make_mesh(1, {{-1.0, 1.0}}, {4});
  const NodalField u0 = interpolate(m5, [](const Vec& p) { return p(0); });
  const NodalField psi = interpolate(m5, [](const Vec& p) { return 0.25 - p(0) * p(0); });
  const NodalField n = normalize_datum(m5, u0, psi);
  CHECK(n(2) == doctest::Approx(0.25));
  CHECK(n(4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(normalize_datum(m5, NodalField::Zero(3), psi), InvalidArgument);
}

TEST_CASE("shifted differences") {
  const Mesh m = make_mesh(1, {{0.0, 1.0}}, {4});
  const NodalField x = interpolate(m, [](const Vec& p) { return p(0); });
  const auto d = shifted_difference(m, x, 0, 1, inner_box(m, 0.2));
  REQUIRE(d.indices.size() == 3);
  for (Eigen::Index k = 0; k < d.values.rows(); ++k) CHECK(d.values(k, 0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(shifted_difference(m, x, 0, 3, inner_box(m, 0.2)), InvalidArgument);

  // Cell gradient of x^2 is x_{i} + x_{i+1}; shifting by one cell adds 2h.
  const Mesh fine = make_mesh(1, {{0.0, 1.0}}, {10});
  const CellField g = cell_gradient(fine, interpolate(fine, [](const Vec& p) { return p(0) * p(0); }));
  const auto dg = shifted_difference(fine, g, 0, 1, inner_box(fine, 0.25));
  REQUIRE(!dg.indices.empty());
  for (Eigen::Index k = 0; k < dg.values.rows(); ++k) CHECK(dg.values(k, 0) == doctest::Approx(0.2).epsilon(1e-12));

  const Mesh sq = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {8, 8});
  const auto z = shifted_difference(sq, NodalField(NodalField::Constant(sq.num_nodes(), 2.0)), 1, 2, inner_box(sq, 0.25));
  CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stiffness and lumped mass") {
  const Mesh m = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {4, 4});
  CHECK(lumped_mass(m).sum() == doctest::Approx(1.0).epsilon(1e-14));
  const auto K = stiffness_matrix(m);
  const NodalField one = NodalField::Ones(m.num_nodes());
  CHECK((K * one).cwiseAbs().maxCoeff() < 1e-13);
}
