#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pqobst/errors.hpp"
#include "pqobst/primal.hpp"

using namespace pqobst;

namespace {

ObstacleProblem parabola(int cells, const IntegrandSpec& F) {
  Mesh m = make_mesh(1, {{-1.0, 1.0}}, {cells});
  NodalField psi = interpolate(m, [](const Vec& x) { return 0.25 - x(0) * x(0); });
  NodalField u0 = NodalField::Zero(m.num_nodes());
  return make_problem(std::move(m), F, std::move(psi), std::move(u0));
}

// Tangent-line solution: contact on |x| <= t with t^2 - 2t + 1/4 = 0.
double parabola_exact(double x) {
  const double t = 1.0 - std::sqrt(3.0) / 2.0;
  const double a = std::abs(x);
  if (a <= t) return 0.25 - x * x;
  return (0.25 - t * t) * (1.0 - a) / (1.0 - t);
}

NodalField random_admissible(const ObstacleProblem& P, std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(0.0, spread);
  NodalField z = P.u0;
  for (int i : P.mesh.interior_nodes()) z(i) = std::max(P.psi(i), P.u0(i)) + u(rng);
  return z;
}

}  // namespace

TEST_CASE("energy values") {
  Mesh m = make_mesh(1, {{0.0, 1.0}}, {8});
  const NodalField zero = NodalField::Zero(m.num_nodes());
  const NodalField x = interpolate(m, [](const Vec& p) { return p(0); });
  const auto P = make_problem(m, power_p(2.0, 1), NodalField::Constant(m.num_nodes(), -1e6), x);
  CHECK(energy(P, zero) == 0.0);
  CHECK(energy(P, x) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("energy gradient against central differences") {
  Mesh m = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {5, 4});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  NodalField u(m.num_nodes());
  for (int i = 0; i < u.size(); ++i) u(i) = nd(rng);
  for (double p : {2.0, 3.0, 1.5}) {
    const auto P = make_problem(m, power_p(p, 2), NodalField::Constant(m.num_nodes(), -1e6), u);
    const NodalField g = energy_gradient(P, u);
    for (int i : m.boundary_nodes()) CHECK(g(i) == 0.0);
    for (int i : m.interior_nodes()) {
      const double h = 1e-6;
      NodalField a = u, b = u;
      a(i) += h;
      b(i) -= h;
      const double fd = (energy(P, a) - energy(P, b)) / (2 * h);
      CHECK(std::abs(fd - g(i)) <= 1e-6 * (1.0 + std::abs(g(i))));
    }
  }
}

TEST_CASE("quadratic energy gradient equals the hat pairing of Du") {
  Mesh m = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {4, 4});
  const NodalField u = interpolate(m, [](const Vec& x) { return 1.0 + 0.5 * x(0) - 2.0 * x(1); });
  const auto P = make_problem(m, power_p(2.0, 2), NodalField::Constant(m.num_nodes(), -1e6), u);
  NodalField pair = hat_pairing(m, cell_gradient(m, u));
  for (int i : m.boundary_nodes()) pair(i) = 0.0;
  CHECK((energy_gradient(P, u) - pair).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(energy_gradient(P, u).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("projection") {
  const auto P = parabola(8, power_p(2.0, 1));
  const NodalField low = NodalField::Constant(P.mesh.num_nodes(), -1e12);
  const NodalField pl = project(P, low);
  for (int i : P.mesh.interior_nodes()) CHECK(pl(i) == P.psi(i));
  for (int i : P.mesh.boundary_nodes()) CHECK(pl(i) == P.u0(i));
  CHECK(project(P, pl) == pl);
  std::mt19937_64 rng(1);
  const NodalField z = random_admissible(P, rng, 1.0);
  CHECK(project(P, z) == z);
}

TEST_CASE("infeasible data is rejected") {
  Mesh m = make_mesh(1, {{0.0, 1.0}}, {4});
  CHECK_THROWS_AS(make_problem(m, power_p(2.0, 1), NodalField::Constant(5, 1.0), NodalField::Zero(5)),
                  InvalidArgument);
  CHECK_THROWS_AS(make_problem(m, power_p(2.0, 2), NodalField::Zero(5), NodalField::Zero(5)), InvalidArgument);
  ObstacleProblem bad{m, power_p(2.0, 1), NodalField::Constant(5, 1.0), NodalField::Zero(5)};
  CHECK_THROWS_AS(solve(bad), InvalidArgument);
}

TEST_CASE("parabola obstacle against the tangent-line solution") {
  const auto P = parabola(512, power_p(2.0, 1));
  const Solution s = solve(P);
  CHECK(s.converged);
  double err = 0.0;
  for (int i = 0; i < P.mesh.num_nodes(); ++i) err = std::max(err, std::abs(s.u(i) - parabola_exact(P.mesh.node(i)(0))));
  CHECK(err <= 2e-3);
  for (int i = 0; i < s.u.size(); ++i) CHECK(s.u(i) >= P.psi(i) - 1e-14);
  for (std::size_t k = 1; k < s.trace.size(); ++k) CHECK(s.trace[k].energy <= s.trace[k - 1].energy);
  CHECK(s.energy == doctest::Approx(energy(P, s.u)).epsilon(1e-15));

  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) CHECK(energy(P, random_admissible(P, rng, 0.1)) >= s.energy);

  // Discrete variational inequality against sampled competitors.
  const NodalField g = energy_gradient(P, s.u);
  for (int k = 0; k < 50; ++k) CHECK(g.dot(random_admissible(P, rng, 0.2) - s.u) >= -1e-8);
}

TEST_CASE("unconstrained case gives the affine interpolant") {
  Mesh m = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {8, 8});
  const NodalField affine = interpolate(m, [](const Vec& x) { return 0.3 + x(0) - 0.5 * x(1); });
  const auto P = make_problem(m, power_p(2.0, 2), NodalField::Constant(m.num_nodes(), -1e6), affine);
  const Solution s = solve(P);
  CHECK(s.converged);
  CHECK(s.residual <= 1e-8);
  CHECK((s.u - affine).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projected gradient variant reaches the same minimizer") {
  const auto P = parabola(16, power_p(2.0, 1));
  SolveOptions opt;
  opt.method = SolverMethod::ProjectedGradient;
  opt.max_iters = 20000;
  const Solution a = solve(P, opt);
  const Solution b = solve(P);
  CHECK(a.converged);
  CHECK(a.energy == doctest::Approx(b.energy).epsilon(1e-8));
}

TEST_CASE("iteration cap is reported, not thrown") {
  const auto P = parabola(64, power_p(3.0, 1));
  SolveOptions opt;
  opt.max_iters = 1;
  const Solution s = solve(P, opt);
  CHECK_FALSE(s.converged);
  CHECK(s.stop_reason == "max_iters");
  CHECK(s.iterations == 1);
}

TEST_CASE("oracle agrees with the solver on small problems") {
  const auto P = parabola(5, power_p(2.0, 1));
  const Solution o = oracle_solve(P);
  const Solution s = solve(P);
  CHECK(o.energy == doctest::Approx(s.energy).epsilon(1e-10));
  CHECK(active_set(P, o.u) == active_set(P, s.u));

  // No contact: the obstacle is far below.
  Mesh m = make_mesh(1, {{0.0, 1.0}}, {6});
  const auto free = make_problem(m, power_p(3.0, 1), NodalField::Constant(7, -5.0),
                                 interpolate(m, [](const Vec& x) { return x(0) * x(0); }));
  const Solution of = oracle_solve(free);
  CHECK(active_set(free, of.u).empty());
  CHECK(of.energy == doctest::Approx(solve(free).energy).epsilon(1e-8));

  // Full contact: a high obstacle in the interior.
  NodalField high = NodalField::Constant(7, 2.0);
  high(0) = high(6) = 0.0;
  const auto full = make_problem(m, power_p(2.0, 1), high, NodalField::Zero(7));
  const Solution fo = oracle_solve(full);
  CHECK(active_set(full, fo.u).size() == 5);
  for (int i : m.interior_nodes()) CHECK(fo.u(i) == 2.0);

  Mesh big = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {5, 5});
  const auto too_big = make_problem(big, power_p(2.0, 2), NodalField::Constant(big.num_nodes(), -1.0),
                                    NodalField::Zero(big.num_nodes()));
  CHECK_THROWS_AS(oracle_solve(too_big), Unsupported);
}

TEST_CASE("uniform energy bound along the approximation sequence") {
  const auto F = power_p(2.0, 1);
  const auto P = parabola(64, F);
  const double datum = energy(P, P.u0);
  for (int k : {1, 2, 4}) {
    const auto Fk = approx_seq(F, k, 1.0, {0.1, false, 21}).integrand;
    ObstacleProblem Pk{P.mesh, Fk, P.psi, P.u0};
    const Solution s = solve(Pk);
    const CellField Du = cell_gradient(P.mesh, s.u);
    const double lhs = F.ell * integrate_cells(P.mesh, Du.rowwise().squaredNorm());
    CHECK(lhs <= datum + F.ell * P.mesh.measure() + 1e-12);
  }
}
