#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfe/functionals.hpp"
#include "mfe/probes.hpp"

using namespace mfe;
using std::numbers::pi;

namespace {

ScalarField cosx(const Grid& g) {
  return ScalarField::sample(g, [](double x, double) { return std::cos(2 * pi * x); });
}

// KL divergence of node mass vectors written out directly.
double kl(const Measure& a, const Measure& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.grid().size(); ++k) s += a.mass(k) * std::log(a.mass(k) / b.mass(k));
  return s;
}

}  // namespace

TEST_CASE("admissibility") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  auto ok = make_potential(ScalarField(g, 3.0), omega);
  CHECK(ok.slack == doctest::Approx(1.0));
  // Large oscillation breaks omega + dd^c u >= 0.
  auto bad = make_potential(10.0 * cosx(g), omega);
  CHECK(bad.slack < 0);
  CHECK_THROWS_AS(energy_E(bad, omega), NotPsh);
  CHECK_THROWS_AS(ma_measure(bad, omega), NotPsh);
  CHECK(default_psh_tolerance(g) == doctest::Approx(1e-10 * 32 * 32));
}

TEST_CASE("Monge-Ampere measure") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  SUBCASE("zero potential") {
    auto omega_c = BackgroundForm::cosine(g, 0.5);
    auto mu = ma_measure(make_potential(ScalarField(g), omega_c), omega_c);
    CHECK(max_abs(mu.density() - omega_c.rho) < 1e-13);
  }
  SUBCASE("linear in u") {
    const double lambda = laplacian_eigenvalue(32, 1, 0);
    const double a = 0.5 * 4 * pi / -lambda;  // keeps the density >= 1/2
    auto mu = ma_measure(make_potential(a * cosx(g), omega), omega);
    auto expect = ScalarField(g, 1.0) + (a * lambda / (4 * pi)) * cosx(g);
    CHECK(max_abs(mu.density() - expect) < 1e-12);
  }
  SUBCASE("unit mass") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 5; ++i) {
      auto u = random_admissible(omega, rng, 2.0);
      CHECK(ma_measure(u, omega).total_mass() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(integral(ma_density(u.u, omega)) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("energy") {
  Grid g(32);
  auto omega = BackgroundForm::cosine(g, 0.5);
  SUBCASE("constants") {
    CHECK(energy_E(make_potential(ScalarField(g, 2.5), omega), omega) == doctest::Approx(2.5));
  }
  SUBCASE("translation rule") {
    std::mt19937_64 rng(3);
    auto u = random_admissible(omega, rng);
    auto v = make_potential(u.u + 0.7, omega);
    CHECK(energy_E(v, omega) - energy_E(u, omega) == doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("cos(2 pi x) on Lebesgue converges to -pi/4") {
    std::vector<double> err;
    for (int n : {16, 32, 64, 128}) {
      Grid gn(n);
      auto leb = BackgroundForm::lebesgue(gn);
      // cos(2 pi x) is admissible once scaled by 1/pi; E(su) = -s^2 pi/4 for zero-mean u.
      const double s = 1.0 / pi;
      err.push_back(std::abs(energy_E(make_potential(s * cosx(gn), leb), leb) / (s * s) + pi / 4));
    }
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) > 1.9);
  }
  SUBCASE("gradient is the Monge-Ampere measure") {
    std::mt19937_64 rng(11);
    const double t = 1e-5;
    for (int i = 0; i < 20; ++i) {
      auto u = random_admissible(omega, rng, 0.5);
      auto v = random_bandlimited(g, rng);
      const double plus = energy_E(make_potential(u.u + t * v, omega), omega);
      const double minus = energy_E(make_potential(u.u - t * v, omega), omega);
      const double fd = (plus - minus) / (2 * t);
      const double exact = integrate(v, ma_measure(u, omega));
      CHECK(std::abs(fd - exact) <= 1e-4 * (1 + std::abs(exact)));
    }
  }
  SUBCASE("concave and nondecreasing along admissible data") {
    std::mt19937_64 rng(5);
    auto u0 = random_admissible(omega, rng), u1 = random_admissible(omega, rng);
    const double e0 = energy_E(u0, omega), e1 = energy_E(u1, omega);
    auto mid = make_potential(0.5 * (u0.u + u1.u), omega);
    CHECK(energy_E(mid, omega) >= 0.5 * (e0 + e1) - 1e-12);
    // Adding a nonnegative admissible perturbation cannot lower E.
    auto w = random_admissible(omega, rng);
    ScalarField shifted = w.u - w.u.min();
    auto bigger = make_potential(0.5 * u0.u + 0.5 * (u0.u + shifted), omega);
    CHECK(energy_E(bigger, omega) >= e0 - 1e-12);
  }
}

TEST_CASE("Aubin functionals") {
  Grid g(32);
  auto omega = BackgroundForm::cosine(g, 0.5);
  std::mt19937_64 rng(21);
  CHECK(aubin_I(make_potential(ScalarField(g, 1.0), omega), omega) == doctest::Approx(0.0).scale(1));
  CHECK(aubin_J(make_potential(ScalarField(g, 1.0), omega), omega) == doctest::Approx(0.0).scale(1));
  for (int i = 0; i < 10; ++i) {
    auto u = random_admissible(omega, rng, 1.5);
    const double I = aubin_I(u, omega), J = aubin_J(u, omega);
    CHECK(J >= 0);
    CHECK(std::abs(I - 2 * J) <= 1e-10 * (1 + I));
    // Direct definitions: I = -int u (MA(u) - omega), J = -E + int u omega.
    const double I_def = -integral(u.u, ma_density(u.u, omega) - omega.rho);
    CHECK(I == doctest::Approx(I_def).epsilon(1e-10));
    for (double t : {0.0, 0.3, 0.9}) {
      auto tu = make_potential(t * u.u, omega);
      CHECK(aubin_J(tu, omega) == doctest::Approx(t * t * J).epsilon(1e-10).scale(1e-12));
    }
    auto shifted = make_potential(u.u + 4.0, omega);
    CHECK(aubin_J(shifted, omega) == doctest::Approx(J).epsilon(1e-10));
  }
}

TEST_CASE("potential of a measure") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  SUBCASE("omega itself") {
    auto u = potential_of_measure(Measure::lebesgue(g), omega);
    CHECK(max_abs(u.u) < 1e-14);
  }
  SUBCASE("round trip") {
    auto mu = Measure::from_density(ScalarField(g, 1.0) + 0.3 * cosx(g));
    auto u = potential_of_measure(mu, omega);
    const double lambda = laplacian_eigenvalue(32, 1, 0);
    CHECK(max_abs(u.u - (4 * pi * 0.3 / lambda) * cosx(g)) < 1e-12);
    CHECK(max_abs(ma_measure(u, omega).density() - mu.density()) < 1e-9);
    CHECK(u.slack >= 0.0);
  }
  SUBCASE("independent of the density scale") {
    auto d = ScalarField(g, 1.0) + 0.3 * cosx(g);
    auto u1 = potential_of_measure(Measure::from_density(d), omega);
    auto u2 = potential_of_measure(Measure::from_density(7.0 * d), omega);
    CHECK(max_abs(u1.u - u2.u) < 1e-12);
  }
}

TEST_CASE("pluricomplex energy of measures") {
  Grid g(32);
  auto omega = BackgroundForm::cosine(g, 0.5);
  std::mt19937_64 rng(31);
  CHECK(std::abs(measure_energy(Measure::from_density(omega.rho), omega)) < 1e-14);
  for (int i = 0; i < 10; ++i) {
    auto u = random_admissible(omega, rng, 2.0);
    auto mu = ma_measure(u, omega);
    const double e = measure_energy(mu, omega);
    CHECK(e >= 0);
    CHECK(std::abs(e - aubin_J(u, omega)) <= 1e-9 * (1 + e));
  }
  SUBCASE("convexity and subgradient") {
    for (int i = 0; i < 10; ++i) {
      auto m0 = random_measure(g, rng, 1.5), m1 = random_measure(g, rng, 1.5);
      auto mid = Measure::from_density(0.5 * (m0.density() + m1.density()));
      const double e0 = measure_energy(m0, omega), e1 = measure_energy(m1, omega);
      CHECK(measure_energy(mid, omega) <= 0.5 * (e0 + e1) + 1e-12);
      auto u0 = potential_of_measure(m0, omega);
      const double pair = integrate(u0.u, m1) - integrate(u0.u, m0);
      CHECK(e1 >= e0 - pair - 1e-12);
    }
  }
}

TEST_CASE("entropy") {
  Grid g(64);
  auto leb = Measure::lebesgue(g);
  CHECK(entropy_D(leb, leb) == 0.0);
  SUBCASE("half indicator gives log 2") {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
      Grid gn(n);
      // Smoothed indicator of x < 1/2 with a transition of width 1/n.
      auto d = ScalarField::sample(gn, [n](double x, double) {
        const double s = std::sin(2 * pi * x);
        return 1.0 + std::tanh(n * s / 4.0);
      });
      err.push_back(std::abs(entropy_D(Measure::from_density(d), Measure::lebesgue(gn)) - std::log(2.0)));
    }
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
    CHECK(err[2] < 4.0 / 128);
  }
  SUBCASE("matches a fine-grid oracle for smooth densities") {
    auto f = [](double x, double y) { return std::exp(0.8 * std::sin(2 * pi * x) * std::cos(2 * pi * y)); };
    auto f0 = [](double x, double y) { return 1.0 + 0.4 * std::cos(2 * pi * (x + y)); };
    auto mu = Measure::from_density(ScalarField::sample(g, f));
    auto mu0 = Measure::from_density(ScalarField::sample(g, f0));
    // Midpoint oracle on a 1024 staggered grid with its own normalizations.
    const int m = 1024;
    double z = 0, z0 = 0, acc = 0;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) / m, y = (j + 0.5) / m;
        z += f(x, y);
        z0 += f0(x, y);
      }
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) / m, y = (j + 0.5) / m;
        const double p = f(x, y) / z, p0 = f0(x, y) / z0;
        acc += p * std::log(p / p0);
      }
    CHECK(entropy_D(mu, mu0) == doctest::Approx(acc).epsilon(1e-6));
  }
  SUBCASE("absolute continuity failure") {
    auto d0 = ScalarField::sample(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; });
    CHECK(std::isinf(entropy_D(leb, Measure::from_density(d0))));
    CHECK(free_energy_F(leb, Measure::from_density(d0), 1.0, BackgroundForm::lebesgue(g)) > 0);
    CHECK(std::isinf(free_energy_F(leb, Measure::from_density(d0), -1.0, BackgroundForm::lebesgue(g))));
    CHECK(free_energy_F(leb, Measure::from_density(d0), -1.0, BackgroundForm::lebesgue(g)) < 0);
  }
  SUBCASE("directional derivative along a segment") {
    std::mt19937_64 rng(41);
    auto mu0 = random_measure(g, rng, 1.0);
    for (int i = 0; i < 5; ++i) {
      auto a = random_measure(g, rng, 1.0), b = random_measure(g, rng, 1.0);
      const double t = 1e-5;
      auto at = [&](double s) {
        return Measure::from_density((1 - s) * a.density() + s * b.density());
      };
      const double fd = (entropy_D(at(0.5 + t), mu0) - entropy_D(at(0.5 - t), mu0)) / (2 * t);
      auto mid = at(0.5);
      ScalarField logratio(g);
      for (std::size_t k = 0; k < g.size(); ++k) logratio[k] = std::log(mid.mass(k) / mu0.mass(k));
      const double exact = integrate(logratio, b) - integrate(logratio, a);
      CHECK(std::abs(fd - exact) <= 1e-4 * std::abs(exact) + 1e-9);
    }
  }
}

TEST_CASE("log moment") {
  Grid g(32);
  auto leb = Measure::lebesgue(g);
  std::mt19937_64 rng(51);
  CHECK(log_moment_L(ScalarField(g, 3.0), 2.0, leb) == doctest::Approx(-3.0));
  CHECK(log_moment_L(ScalarField(g, 3.0), -2.0, leb) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(log_moment_L(ScalarField(g, 3.0), 0.0, leb), InvalidArgument);
  SUBCASE("small beta limit") {
    auto mu0 = random_measure(g, rng);
    auto u = random_bandlimited(g, rng);
    const double beta = 1e-4;
    // -L = <u> + beta var(u)/2 + O(beta^2).
    const double mean = integrate(u, mu0);
    double var = 0;
    for (std::size_t k = 0; k < g.size(); ++k) var += (u[k] - mean) * (u[k] - mean) * mu0.mass(k);
    CHECK(std::abs(-log_moment_L(u, beta, mu0) - mean) <= 2 * beta * var + 1e-12);
    CHECK(std::abs(-log_moment_L(u, beta, mu0) - mean - 0.5 * beta * var) <= beta * beta);
  }
  SUBCASE("no overflow for large exponents") {
    auto u = 500.0 * random_bandlimited(g, rng);
    CHECK(std::isfinite(log_moment_L(u, 10.0, leb)));
    CHECK(log_moment_L(u, 10.0, leb) == doctest::Approx(-u.max()).epsilon(0.05));
  }
  SUBCASE("concave for positive beta, convex for negative") {
    auto u = random_bandlimited(g, rng), v = random_bandlimited(g, rng);
    for (double beta : {1.5, -1.5}) {
      const double mid = log_moment_L(0.5 * (u + v), beta, leb);
      const double avg = 0.5 * (log_moment_L(u, beta, leb) + log_moment_L(v, beta, leb));
      if (beta > 0) CHECK(mid >= avg - 1e-14);
      else CHECK(mid <= avg + 1e-14);
    }
  }
  SUBCASE("pole threshold") {
    const Point p{0.5, 0.5};
    auto mu0 = Measure::with_poles(ScalarField(g, 1.0), {{p, 0.5}});
    PoleField green = green_pole_model(BackgroundForm::lebesgue(g), p);
    // e^{-gamma t g} behaves like d^{-2 gamma t}; with d^{-1} from mu0 the sum must stay below 1.
    const double gamma = 1.0;
    PoleField inside(0.4 * green.smooth, {{p, 0.4}});
    PoleField outside(0.6 * green.smooth, {{p, 0.6}});
    CHECK(std::isfinite(log_moment_L(inside, -gamma, mu0)));
    CHECK_THROWS_AS(log_moment_L(outside, -gamma, mu0), DivergentIntegral);
  }
  SUBCASE("pole-free fields agree with the grid evaluation") {
    auto u = random_bandlimited(g, rng);
    CHECK(log_moment_L(PoleField(u), -1.3, leb) == doctest::Approx(log_moment_L(u, -1.3, leb)).epsilon(1e-12));
  }
}

TEST_CASE("free energy, Ding functional and the duality gap") {
  Grid g(32);
  auto omega = BackgroundForm::cosine(g, 0.5);
  auto mu_omega = Measure::from_density(omega.rho);
  std::mt19937_64 rng(61);
  CHECK(std::abs(free_energy_F(mu_omega, mu_omega, 1.0, omega)) < 1e-14);
  CHECK(std::abs(ding_G(make_potential(ScalarField(g), omega), mu_omega, 2.0, omega)) < 1e-14);
  auto mu0 = random_measure(g, rng, 1.0);
  SUBCASE("gauge invariance") {
    for (double beta : {2.0, -1.0}) {
      auto u = random_admissible(omega, rng);
      auto v = make_potential(u.u + 3.3, omega);
      CHECK(ding_G(v, mu0, beta, omega) == doctest::Approx(ding_G(u, mu0, beta, omega)).epsilon(1e-10));
      CHECK(duality_gap(v, mu0, beta, omega) == doctest::Approx(duality_gap(u, mu0, beta, omega)).epsilon(1e-8));
      CHECK(mabuchi_K(v, mu0, beta, omega) == doctest::Approx(mabuchi_K(u, mu0, beta, omega)).epsilon(1e-10));
    }
  }
  SUBCASE("gap equals KL to the Gibbs measure over |beta|") {
    for (double beta : {1.0, 3.0, -1.0, -1.5}) {
      for (int i = 0; i < 5; ++i) {
        auto u = random_admissible(omega, rng, 1.0);
        const double gap = duality_gap(u, mu0, beta, omega);
        const double oracle = kl(ma_measure(u, omega), gibbs_measure(u.u, beta, mu0)) / std::abs(beta);
        CHECK(gap >= 0);
        CHECK(gap == doctest::Approx(oracle).epsilon(1e-8).scale(1e-12));
      }
    }
  }
  SUBCASE("zero potential is not a solution for non-omega mu0") {
    CHECK(duality_gap(make_potential(ScalarField(g), omega), mu0, 1.0, omega) > 1e-6);
  }
  SUBCASE("entropy duality identity") {
    const double gamma = 1.7;
    for (int i = 0; i < 5; ++i) {
      auto u = random_admissible(omega, rng, 1.0);
      auto mu = gibbs_measure(u.u, -gamma, mu0);
      // (1/gamma) D(mu) = -(1/gamma) log int e^{-gamma u} mu0 - <u, mu>.
      const double lhs = entropy_D(mu, mu0) / gamma;
      const double rhs = -log_moment_L(u.u, -gamma, mu0) - integrate(u.u, mu);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
  SUBCASE("negative beta sandwich") {
    const double beta = -1.5;
    for (int i = 0; i < 10; ++i) {
      auto u = random_admissible(omega, rng, 1.0);
      const double G = ding_G(u, mu0, beta, omega);
      CHECK(free_energy_F(ma_measure(u, omega), mu0, beta, omega) <= G + 1e-12);
      CHECK(free_energy_F(gibbs_measure(u.u, beta, mu0), mu0, beta, omega) >= G - 1e-12);
    }
  }
  SUBCASE("report") {
    auto u = random_admissible(omega, rng);
    auto r = evaluate_functionals(u, mu0, -1.2, omega);
    CHECK(r.G == doctest::Approx(r.E + r.L));
    CHECK(r.K == doctest::Approx(-1.2 * r.F));
    CHECK(std::abs(r.I - 2 * r.J) <= 1e-8 * (1 + r.I));
    CHECK(r.D >= 0);
    auto z = evaluate_functionals(make_potential(ScalarField(g), omega), mu_omega, 1.0, omega);
    CHECK(std::abs(z.K) < 1e-14);
  }
}
