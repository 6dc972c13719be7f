#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pqobst/errors.hpp"
#include "pqobst/limitflow.hpp"

using namespace pqobst;

namespace {

ObstacleProblem parabola(int cells, const IntegrandSpec& F) {
  Mesh m = make_mesh(1, {{-1.0, 1.0}}, {cells});
  NodalField psi = interpolate(m, [](const Vec& x) { return 0.25 - x(0) * x(0); });
  return make_problem(std::move(m), F, std::move(psi), NodalField::Zero(cells + 1));
}

const Verdict& find(const SweepReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v;
  throw std::runtime_error("missing verdict " + name);
}

}  // namespace

TEST_CASE("truncated sweep on the parabola problem") {
  const auto P = parabola(512, power_p(2.0, 1));
  const SweepReport rep = run_sweep(P, {1, 2, 4, 8});
  REQUIRE(rep.records.size() == 4);
  for (const auto& v : rep.verdicts) CHECK_MESSAGE(v.ok, v.name << ": " << v.detail);
  CHECK(rep.all_ok());
  CHECK(rep.stabilization_index == 2);  // R = 0.4 exceeds the slope 2 - sqrt(3)
  for (std::size_t j = 1; j < rep.records.size(); ++j) {
    CHECK(rep.records[j].energy_Fk >= rep.records[j - 1].energy_Fk);
    CHECK(rep.records[j].mu_k <= rep.records[j - 1].mu_k);
  }
  CHECK(rep.records[2].vp_dist <= 1e-8);
  CHECK(rep.records[0].vp_dist > rep.records[2].vp_dist);
  for (const auto& r : rep.records) {
    CHECK(r.energy_Fk <= r.energy_F + 1e-14);
    CHECK(r.div_violation_k <= 1e-8);
    CHECK(r.vi_min_k >= -1e-8);
  }
  // Quadratic self-duality: past stabilization int F*(sigma) = int F(Du) <= int F(Du0).
  CHECK(rep.records.back().fstar_sigma_L1 == doctest::Approx(rep.records.back().energy_F).epsilon(1e-10));
  CHECK(rep.records.back().fstar_sigma_L1 <= rep.datum_energy);
}

TEST_CASE("p = 3 sweep") {
  const auto P = parabola(128, power_p(3.0, 1));
  SweepOptions opt;
  opt.radius_scale = 0.05;
  const SweepReport rep = run_sweep(P, {1, 2, 4, 8}, opt);
  for (const auto& v : rep.verdicts) CHECK_MESSAGE(v.ok, v.name << ": " << v.detail);
}

TEST_CASE("single k is insufficient data") {
  const auto P = parabola(64, power_p(2.0, 1));
  const SweepReport rep = run_sweep(P, {1});
  CHECK(rep.records.size() == 1);
  CHECK_FALSE(rep.all_ok());
  CHECK(find(rep, "energy_convergence").detail == "insufficient data");
}

TEST_CASE("radii below the gradient range never stabilize") {
  const auto P = parabola(64, power_p(2.0, 1));
  SweepOptions opt;
  opt.radius_scale = 0.01;
  const SweepReport rep = run_sweep(P, {1, 2, 3}, opt);
  CHECK(rep.stabilization_index == -1);
  CHECK_FALSE(find(rep, "stabilization").ok);
  CHECK(find(rep, "energy_convergence").ok == false);
  CHECK_FALSE(rep.all_ok());
}

TEST_CASE("bad k lists are rejected") {
  const auto P = parabola(16, power_p(2.0, 1));
  CHECK_THROWS_AS(run_sweep(P, {}), InvalidArgument);
  CHECK_THROWS_AS(run_sweep(P, {2, 2}), InvalidArgument);
  CHECK_THROWS_AS(run_sweep(P, {0, 1}), InvalidArgument);
}

TEST_CASE("limit variational inequality") {
  const auto P = parabola(256, power_p(2.0, 1));
  const SweepReport rep = run_sweep(P, {2, 4, 8});
  const auto comps = default_competitors(P, rep.reference, 8, 7);
  CHECK(comps.size() == 18);
  for (const auto& z : comps) CHECK(is_admissible(P, z));
  CHECK(check_vi(P, rep.reference, comps[0]) == 0.0);
  CHECK(check_limit_vi(P, rep, comps).ok);

  // The lifted oracle solution of a coarse nested problem is admissible after projection.
  const auto coarse = parabola(8, power_p(2.0, 1));
  const Solution o = oracle_solve(coarse);
  NodalField lifted(P.mesh.num_nodes());
  for (int i = 0; i < P.mesh.num_nodes(); ++i) {
    const double x = P.mesh.node(i)(0);
    const double t = (x + 1.0) / 0.25;
    const int c = std::min(7, static_cast<int>(t));
    lifted(i) = o.u(c) + (t - c) * (o.u(c + 1) - o.u(c));
  }
  lifted = project(P, lifted);
  CHECK(check_vi(P, rep.reference, lifted) >= -1e-6);

  NodalField bad = rep.reference;
  bad(10) = P.psi(10) - 1.0;
  const auto v = check_limit_vi(P, rep, {bad});
  CHECK(v.ok);
  CHECK(v.detail.find("skipped 1") != std::string::npos);
}

TEST_CASE("dual bounds") {
  const auto P = parabola(128, power_p(2.0, 1));
  SweepReport rep = run_sweep(P, {1, 8});
  CHECK(check_dual_bounds(rep, rep.datum_energy, P.integrand).ok);
  for (auto& r : rep.records) {
    r.fstar_sigma_L1 = 0.0;
    r.sigma_Lqprime = 0.0;
  }
  CHECK(check_dual_bounds(rep, rep.datum_energy, P.integrand).ok);
  rep.records[0].fstar_sigma_L1 = 10.0 * rep.doubling_constant * rep.datum_energy;
  CHECK_FALSE(check_dual_bounds(rep, rep.datum_energy, P.integrand).ok);
}

TEST_CASE("quadratic with affine datum") {
  Mesh m = make_mesh(2, {{0.0, 1.0}, {0.0, 1.0}}, {8, 8});
  const NodalField aff = interpolate(m, [](const Vec& x) { return 0.2 * x(0) - 0.1 * x(1); });
  const auto P = make_problem(m, power_p(2.0, 2), NodalField::Constant(m.num_nodes(), -1.0), aff);
  const SweepReport rep = run_sweep(P, {1, 2, 3, 4});
  for (const auto& v : rep.verdicts) CHECK_MESSAGE(v.ok, v.name << ": " << v.detail);
  for (const auto& r : rep.records) {
    // The affine datum minimizes every F_k; the energies agree once R_k > |Du0|.
    CHECK(r.vp_dist <= 1e-20);
    if (r.radius > r.max_grad) CHECK(r.energy_Fk == doctest::Approx(rep.datum_energy).epsilon(1e-12));
  }
}
