#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfe/envelope.hpp"
#include "mfe/probes.hpp"

using namespace mfe;
using std::numbers::pi;

namespace {

// Energy formula extended to non-admissible fields.
double energy_formula(const ScalarField& u, const BackgroundForm& omega) {
  return integral(u, omega.rho) - 0.5 * dirichlet(u, u);
}

// Plain projected Jacobi with no relaxation, run for a fixed large number of sweeps.
ScalarField projected_jacobi(const ScalarField& obstacle, const BackgroundForm& omega,
                             ScalarField v, int sweeps) {
  const Grid& g = obstacle.grid();
  const int n = g.n_side();
  const double h2 = g.cell_area();
  for (int s = 0; s < sweeps; ++s) {
    ScalarField next(g);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double cap = 0.25 * (v.at(i + 1, j) + v.at(i - 1, j) + v.at(i, j + 1) +
                                   v.at(i, j - 1) + 4 * pi * h2 * omega.rho.at(i, j));
        next.at(i, j) = std::min(obstacle.at(i, j), cap);
      }
    v = std::move(next);
  }
  return v;
}

}  // namespace

TEST_CASE("trivial envelopes") {
  Grid g(32);
  SUBCASE("nonnegative omega and zero obstacle") {
    auto omega = BackgroundForm::cosine(g, 0.8);
    auto r = envelope_zero(omega);
    CHECK(max_abs(r.Pu.u) == 0.0);
    CHECK(std::all_of(r.contact_set.begin(), r.contact_set.end(), [](bool b) { return b; }));
  }
  SUBCASE("admissible obstacle is fixed") {
    auto omega = BackgroundForm::cosine(g, 0.5);
    std::mt19937_64 rng(1);
    auto u = random_admissible(omega, rng, 1.0);
    auto r = psh_project(u.u, omega);
    CHECK(max_abs(r.Pu.u - u.u) < 1e-12);
    CHECK(orthogonality_residual(u.u, omega) == 0.0);
  }
}

TEST_CASE("sign-changing benchmark against projected Jacobi") {
  Grid g(8);
  auto omega = BackgroundForm::cosine(g, 2.0);
  auto r = envelope_zero(omega);
  const ScalarField zero(g);
  auto from_above = projected_jacobi(zero, omega, zero, 20000);
  auto from_below = projected_jacobi(zero, omega, ScalarField(g, -2.0), 20000);
  CHECK(max_abs(from_above - from_below) < 1e-9);
  CHECK(max_abs(r.Pu.u - from_above) < 1e-9);
  // Nontrivial band around x = 1/2 where omega is negative.
  CHECK(r.Pu.u.min() < -0.1);
  CHECK(r.Pu.u.at(4, 3) < -0.1);
  CHECK(r.Pu.u.at(0, 3) > -1e-8);
}

TEST_CASE("complementarity and orthogonality at 64") {
  Grid g(64);
  auto omega = BackgroundForm::cosine(g, 2.0);
  auto r = envelope_zero(omega);
  CHECK(r.lcp_residual <= 1e-9);
  CHECK(r.Pu.u.max() <= 1e-10);
  CHECK(std::abs(r.Pu.u.max()) <= 1e-8);
  CHECK(r.Pu.slack >= -default_psh_tolerance(g));
  auto ma = ma_density(r.Pu.u, omega);
  for (std::size_t k = 0; k < ma.size(); ++k) {
    CHECK(std::min(-r.Pu.u[k], ma[k]) <= 1e-8);
    if (!r.contact_set[k]) CHECK(std::abs(ma[k]) <= 1e-8);
  }
  CHECK(orthogonality_residual(ScalarField(g), omega) <= 1e-7);
}

TEST_CASE("envelope properties on random obstacles") {
  Grid g(32);
  auto omega = BackgroundForm::cosine(g, 2.0);
  std::mt19937_64 rng(9);
  auto obstacle = [&] { return 0.3 * random_bandlimited(g, rng, 6); };
  SUBCASE("energy does not decrease under projection") {
    for (int i = 0; i < 5; ++i) {
      auto u = obstacle();
      auto r = psh_project(u, omega);
      CHECK(energy_E(r.Pu, omega) >= energy_formula(u, omega) - 1e-10);
      CHECK(orthogonality_residual(u, omega) <= 1e-7);
    }
  }
  SUBCASE("monotone in the obstacle") {
    auto u1 = obstacle();
    auto bump = random_bandlimited(g, rng);
    auto u2 = u1 + (bump - bump.min());
    auto p1 = psh_project(u1, omega).Pu.u, p2 = psh_project(u2, omega).Pu.u;
    for (std::size_t k = 0; k < p1.size(); ++k) CHECK(p1[k] <= p2[k] + 1e-9);
  }
  SUBCASE("E o P is concave along segments") {
    auto u0 = obstacle(), u1 = obstacle();
    const double e0 = energy_E(psh_project(u0, omega).Pu, omega);
    const double e1 = energy_E(psh_project(u1, omega).Pu, omega);
    for (double t : {0.25, 0.5, 0.75}) {
      const double et = energy_E(psh_project((1 - t) * u0 + t * u1, omega).Pu, omega);
      CHECK(et >= (1 - t) * e0 + t * e1 - 1e-7);
    }
  }
  SUBCASE("gradient of E o P") {
    const double t = 1e-4;
    for (int i = 0; i < 5; ++i) {
      auto u = obstacle();
      auto v = random_bandlimited(g, rng);
      auto pu = psh_project(u, omega).Pu;
      const double fd = (energy_E(psh_project(u + t * v, omega).Pu, omega) -
                         energy_E(psh_project(u - t * v, omega).Pu, omega)) / (2 * t);
      const double exact = integral(ma_density(pu.u, omega), v);
      CHECK(std::abs(fd - exact) <= 1e-3 * std::abs(exact) + 1e-8);
    }
  }
}

TEST_CASE("non-convergence is reported") {
  Grid g(32);
  auto omega = BackgroundForm::cosine(g, 2.0);
  EnvelopeOptions opt;
  opt.max_iter = 3;
  CHECK_THROWS_AS(envelope_zero(omega, opt), LcpNonConvergence);
}
