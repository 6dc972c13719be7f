#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "pqobst/errors.hpp"
#include "pqobst/integrand.hpp"

using namespace pqobst;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v1(double a) { return (Vec(1) << a).finished(); }

Vec random_point(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

// Central differences with step 1e-5, written independently of the library.
Vec fd_gradient(const IntegrandSpec& F, const Vec& xi) {
  Vec g(xi.size());
  for (int i = 0; i < xi.size(); ++i) {
    Vec a = xi, b = xi;
    a(i) += 1e-5;
    b(i) -= 1e-5;
    g(i) = (eval(F, a) - eval(F, b)) / 2e-5;
  }
  return g;
}

// Brute-force conjugate on a fine 1D grid for cross-checking closed forms.
double grid_conjugate_1d(const IntegrandSpec& F, double zeta, double radius, int n) {
  double best = -1e300;
  for (int i = 0; i <= n; ++i) {
    const double x = -radius + 2.0 * radius * i / n;
    best = std::max(best, zeta * x - eval(F, v1(x)));
  }
  return best;
}

}  // namespace

TEST_CASE("power integrand values and gradients") {
  const auto F2 = power_p(2.0, 2);
  CHECK(eval(F2, v2(0, 0)) == 0.0);
  CHECK(eval(F2, v2(3, 4)) == doctest::Approx(12.5).epsilon(1e-15));
  CHECK((grad(F2, v2(3, 4)) - v2(3, 4)).norm() < 1e-14);
  const auto F4 = power_p(4.0, 2);
  CHECK((grad(F4, v2(1, 0)) - v2(1, 0)).norm() < 1e-14);
  CHECK(eval(F4, v2(-1.5, 2.0)) == eval(F4, v2(1.5, -2.0)));
}

TEST_CASE("anisotropic example at (1,1)") {
  const auto F = anisotropic_log(2.0, 3.0, 1.0);
  CHECK(eval(F, v2(1, 1)) == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(eval(F, v2(1, 1)) == doctest::Approx(2.772589).epsilon(1e-6));
}

TEST_CASE("non-finite input is rejected") {
  const auto F = power_p(2.0, 2);
  CHECK_THROWS_AS(eval(F, v2(std::nan(""), 0)), InvalidArgument);
  CHECK_THROWS_AS(eval(F, v1(1.0)), InvalidArgument);
  CHECK_THROWS_AS(power_p(1.0, 1), InvalidArgument);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(11);
  const IntegrandSpec p3 = power_p(3.0, 2);
  std::vector<IntegrandSpec> family = {power_p(2.0, 2), p3, power_p(1.5, 2), anisotropic_log(2.0, 2.0, 0.0),
                                       anisotropic_log(2.0, 3.0, 1.0), truncated_conjugate(p3, 2.0),
                                       moreau_smoothed(p3, 2.0, 0.25)};
  for (const auto& F : family) {
    for (int s = 0; s < 200; ++s) {
      Vec xi = random_point(rng, 2, 3.0);
      // Keep away from the kinks of the anisotropic example on the axes.
      if (F.family == Family::AnisotropicLogExample && (std::abs(xi(0)) < 1e-2 || std::abs(xi(0) - xi(1)) < 1e-2))
        continue;
      const Vec g = grad(F, xi);
      const Vec fd = fd_gradient(F, xi);
      CHECK((g - fd).norm() <= 1e-6 * (1.0 + g.norm()) * 10);
    }
  }
}

TEST_CASE("vp map") {
  CHECK((vp_map(2.0, v2(0.3, -0.7)) - v2(0.3, -0.7)).norm() == 0.0);
  CHECK(vp_map(3.0, v2(0, 0)).norm() == 0.0);
  const Vec v = vp_map(4.0, v2(1, 0));
  CHECK(v(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(v(1) == 0.0);
}

TEST_CASE("V_p increment sandwich") {
  const auto r = check_vi_lemma_bounds(4.0, v2(1, 0), v2(0, 0), 1.5);
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.weight == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.lower_ok);
  CHECK(r.upper_ok);
  CHECK_THROWS_AS(check_vi_lemma_bounds(2.0, v2(1, 1), v2(1, 1)), InvalidArgument);

  std::mt19937_64 rng(3);
  const auto q2 = check_vi_lemma_bounds(2.0, random_point(rng, 2, 5.0), random_point(rng, 2, 5.0));
  CHECK(q2.ratio == doctest::Approx(1.0).epsilon(1e-12));
  for (double p : {1.5, 3.0}) {
    const double c = calibrate_vi_constant(2, p, 20000, 5);
    CHECK(c >= 1.1);
    for (int s = 0; s < 500; ++s) {
      const auto rep = check_vi_lemma_bounds(p, random_point(rng, 2, 10.0), random_point(rng, 2, 10.0), c);
      CHECK(rep.lower_ok);
      CHECK(rep.upper_ok);
    }
  }
}

TEST_CASE("closed form conjugates") {
  CHECK(conjugate(power_p(2.0, 2), v2(1, 1)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(conjugate(power_p(3.0, 2), v2(2, 0)) == doctest::Approx(std::pow(2.0, 1.5) / 1.5).epsilon(1e-12));
  CHECK(conjugate(power_p(3.0, 2), v2(2, 0)) == doctest::Approx(1.885618).epsilon(1e-6));
  CHECK(conjugate(anisotropic_log(2.0, 2.0, 0.0), v2(0, 0)) == doctest::Approx(0.0));
  // 1D closed form against a brute-force grid maximization.
  const auto F = power_p(1.5, 1);
  CHECK(conjugate(F, v1(0.8)) == doctest::Approx(grid_conjugate_1d(F, 0.8, 3.0, 600000)).epsilon(1e-8));
}

TEST_CASE("truncated quadratic is the Huber function") {
  const auto H = truncated_conjugate(power_p(2.0, 2), 1.0);
  CHECK(eval(H, v2(2, 0)) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(eval(H, v2(0.5, 0)) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(std::isinf(conjugate(H, v2(1.5, 0))));
  CHECK(conjugate(H, v2(0.6, 0.0)) == doctest::Approx(0.18).epsilon(1e-14));
  // Huber conjugate against brute force in 1D.
  const auto H1 = truncated_conjugate(power_p(2.0, 1), 1.0);
  CHECK(conjugate(H1, v1(0.7)) == doctest::Approx(grid_conjugate_1d(H1, 0.7, 5.0, 500000)).epsilon(1e-8));
}

TEST_CASE("fenchel young identities") {
  CHECK(std::abs(fenchel_young_residual(power_p(2.0, 2), v2(3, 4))) < 1e-13);
  CHECK(std::abs(fenchel_young_residual(power_p(3.0, 2), v2(0, 0))) < 1e-15);
  std::mt19937_64 rng(17);
  const auto A = anisotropic_log(2.0, 3.0, 0.0);
  for (int s = 0; s < 100; ++s) {
    const Vec xi = random_point(rng, 2, 2.0);
    CHECK(std::abs(fenchel_young_residual(A, xi)) <= 1e-6 * (1.0 + eval(A, xi)));
  }
  const auto P = power_p(3.0, 2);
  for (int s = 0; s < 200; ++s) {
    CHECK(fenchel_young_gap(P, random_point(rng, 2, 5.0), random_point(rng, 2, 5.0)) >= -1e-8);
  }
}

TEST_CASE("conjugate growth bounds") {
  std::mt19937_64 rng(23);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto F = power_p(p, 2);
    const auto b = conjugate_growth_bounds(F);
    for (int s = 0; s < 200; ++s) {
      const Vec z = random_point(rng, 2, 4.0);
      const double fs = conjugate(F, z);
      CHECK(fs <= b.upper_coeff * std::pow(z.norm(), b.p_prime) * (1 + 1e-12) + 1e-14);
      CHECK(fs >= b.lower_coeff * std::pow(z.norm(), b.q_prime) - b.lower_offset - 1e-12);
    }
  }
}

TEST_CASE("approximation sequence is monotone and below F") {
  const auto F = power_p(2.0, 2);
  ApproxOptions opt;
  opt.samples_per_axis = 41;
  std::mt19937_64 rng(29);
  std::vector<ApproxSequenceEntry> seq;
  for (int k = 1; k <= 3; ++k) seq.push_back(approx_seq(F, k, 3.0, opt));
  for (int s = 0; s < 1000; ++s) {
    const Vec xi = random_point(rng, 2, 3.0);
    const double f1 = eval(seq[0].integrand, xi), f2 = eval(seq[1].integrand, xi);
    const double f3 = eval(seq[2].integrand, xi);
    CHECK(f1 <= f2 + 1e-12);
    CHECK(f2 <= f3 + 1e-12);
    CHECK(f3 <= eval(F, xi) + 1e-12);
  }
  CHECK(seq[0].mu_k >= seq[1].mu_k);
  CHECK(seq[1].mu_k >= seq[2].mu_k);
  // mu_k vanishes once R_k covers the gradient range sqrt(2)*3 on the box.
  CHECK(approx_seq(F, 5, 3.0, opt).mu_k == 0.0);
  CHECK_THROWS_AS(approx_seq(F, 0, 3.0), InvalidArgument);

  opt.moreau = true;
  const auto m2 = approx_seq(F, 2, 3.0, opt);
  for (int s = 0; s < 200; ++s) {
    const Vec xi = random_point(rng, 2, 3.0);
    CHECK(eval(m2.integrand, xi) <= eval(seq[1].integrand, xi) + 1e-12);
  }
}

TEST_CASE("h2 gap") {
  const auto F = power_p(2.0, 2);
  std::mt19937_64 rng(31);
  for (int s = 0; s < 50; ++s) {
    CHECK(std::abs(check_h2_gap(F, random_point(rng, 2, 3.0), random_point(rng, 2, 3.0), 0.5)) < 1e-12);
  }
  CHECK(check_h2_gap(power_p(3.0, 2), v2(1, 2), v2(1, 2), 0.3) == 0.0);
  const auto cal = calibrate_h2_constant(anisotropic_log(2.0, 3.0, 1.0), 2.0, 10000, 1);
  CHECK(std::isfinite(cal.min_ratio));
}

TEST_CASE("convexity gate") {
  CHECK_NOTHROW(require_convex(power_p(3.0, 2)));
  CHECK_NOTHROW(require_convex(anisotropic_log(2.0, 3.0, 0.0)));
  CHECK_THROWS_AS(require_convex(anisotropic_log(2.0, 3.0, 1.0)), InvalidArgument);
}

TEST_CASE("doubling constant of a power") {
  CHECK(doubling_constant(power_p(3.0, 2), 5.0, 21) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("tabulated integrand") {
  const auto path = std::filesystem::temp_directory_path() / "pqobst_table_test.csv";
  {
    std::ofstream out(path);
    out << "xi1,F,dF1\n";
    for (int i = -20; i <= 20; ++i) {
      const double x = 0.1 * i;
      out << x << "," << 0.5 * x * x << "," << x << "\n";
    }
  }
  const auto F = user_tabulated(read_tabulated_csv(path), 2.0, 2.0);
  CHECK(eval(F, v1(0.5)) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(eval(F, v1(0.55)) <= 0.5 * 0.55 * 0.55 + 1e-12);
  CHECK(conjugate(F, v1(1.0)) == doctest::Approx(0.5).epsilon(1e-12));
  std::filesystem::remove(path);

  {
    std::ofstream out(path);
    out << "xi1,F\n0,0\n1,0.5\nnot,a number\n";
  }
  CHECK_THROWS_AS(read_tabulated_csv(path), InvalidArgument);
  std::filesystem::remove(path);
}
