#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfe/alpha_mt.hpp"
#include "mfe/probes.hpp"

using namespace mfe;
using std::numbers::pi;

namespace {

bool verdicts_monotone(const AlphaReport& r) {
  bool seen_divergent = false;
  for (const auto& s : r.t_samples) {
    if (s.verdict == IntegralVerdict::Diverging) seen_divergent = true;
    if (seen_divergent && s.verdict == IntegralVerdict::Bounded) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("klt measures") {
  Grid g(32);
  SUBCASE("no poles is Lebesgue") {
    auto mu = klt_measure(g, {});
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(mu.mass(k) == doctest::Approx(g.cell_area()));
  }
  SUBCASE("c >= 1 is rejected") {
    CHECK_THROWS_AS(klt_measure(g, {{{0.5, 0.5}, 1.0}}), KltViolation);
    CHECK_THROWS_AS(klt_measure(g, {{{0.5, 0.5}, 0.3}, {{0.2, 0.2}, 1.2}}), KltViolation);
  }
  SUBCASE("c = 0.5 is unbounded at the pole") {
    auto mu = klt_measure(g, {{{0.5, 0.5}, 0.5}});
    CHECK(mu.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mu.density_at({0.5, 0.5}, {1e-6, 0}) > 100 * mu.density_at({0.0, 0.0}));
  }
  SUBCASE("c = -1 vanishes quadratically") {
    auto mu = klt_measure(g, {{{0.5, 0.5}, -1.0}});
    const double a = mu.density_at({0.5, 0.5}, {1e-3, 0});
    const double b = mu.density_at({0.5, 0.5}, {2e-3, 0});
    CHECK(b / a == doctest::Approx(4.0).epsilon(1e-3));
  }
}

TEST_CASE("exponential integrals") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  auto leb = Measure::lebesgue(g);
  SUBCASE("zero field") {
    auto r = exp_integral(PoleField(ScalarField(g)), 1.3, leb);
    CHECK(r.verdict == IntegralVerdict::Bounded);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("Green pole against Lebesgue") {
    auto u = green_pole_model(omega, {0.3, 0.6});
    CHECK(exp_integral(u, 0.9, leb).verdict == IntegralVerdict::Bounded);
    auto over = exp_integral(u, 1.1, leb);
    CHECK(over.verdict == IntegralVerdict::Diverging);
    CHECK(std::isinf(over.value));
  }
  SUBCASE("Green pole at a klt pole") {
    auto mu = klt_measure(g, {{{0.5, 0.5}, 0.5}});
    auto u = green_pole_model(omega, {0.5, 0.5});
    CHECK(exp_integral(u, 0.4, mu).verdict == IntegralVerdict::Bounded);
    CHECK(exp_integral(u, 0.6, mu).verdict == IntegralVerdict::Diverging);
  }
  SUBCASE("value matches the grid sum for smooth fields") {
    std::mt19937_64 rng(4);
    ScalarField f = random_bandlimited(g, rng, 3);
    auto r = exp_integral(PoleField(f), 0.7, leb);
    double s = 0;
    for (std::size_t k = 0; k < g.size(); ++k) s += std::exp(-0.7 * (f[k] - f.max())) * g.cell_area();
    // Hat moments integrate the interpolant, so only interpolation error separates them.
    CHECK(r.value == doctest::Approx(s).epsilon(2e-3));
  }
}

TEST_CASE("alpha invariant ground truths") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  SUBCASE("Lebesgue") {
    auto r = alpha_estimate(Measure::lebesgue(g), omega);
    CHECK(r.alpha_hat >= 0.95);
    CHECK(r.alpha_hat <= 1.05);
    CHECK(r.upper - r.lower <= 0.02);
    CHECK(verdicts_monotone(r));
    CHECK_FALSE(r.inconclusive);
  }
  SUBCASE("single klt pole") {
    auto r = alpha_estimate(klt_measure(g, {{{0.5, 0.5}, 0.5}}), omega);
    CHECK(r.alpha_hat == doctest::Approx(0.5).epsilon(0.1));
    CHECK(verdicts_monotone(r));
  }
  SUBCASE("smooth but nonuniform data stays below one") {
    std::mt19937_64 rng(9);
    auto r = alpha_estimate(random_measure(g, rng, 1.0), omega);
    CHECK(r.alpha_hat <= 1.05);
  }
}

TEST_CASE("Frostman exponent") {
  Grid g(32);
  CHECK(frostman_exponent(Measure::lebesgue(g)) == doctest::Approx(2.0).epsilon(0.05));
  const double d5 = frostman_exponent(klt_measure(g, {{{0.5, 0.5}, 0.5}}));
  CHECK(std::abs(d5 - 1.0) <= 0.1);
  const double d9 = frostman_exponent(klt_measure(g, {{{0.5, 0.5}, 0.9}}));
  CHECK(std::abs(d9 - 0.2) <= 0.1);
}

TEST_CASE("coercivity probe") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  auto leb = Measure::lebesgue(g);
  CoercivityOptions opt;
  opt.alpha_hint = 1.0;
  SUBCASE("inside the window") {
    auto r = coercivity_probe(1.5, leb, omega, opt);
    CHECK(r.pass);
    CHECK_FALSE(r.unbounded_trend);
    CHECK(r.threshold == doctest::Approx(1.9));
  }
  SUBCASE("past the threshold the concentrating family grows") {
    auto r = coercivity_probe(2.5, leb, omega, opt);
    CHECK_FALSE(r.pass);
    CHECK(r.unbounded_trend);
    CHECK(r.trend_slope > 0.0);
    CHECK_FALSE(r.witness.empty());
    REQUIRE(r.trend.size() >= 3);
    for (std::size_t i = r.trend.size() - 2; i < r.trend.size(); ++i) {
      CHECK(r.trend[i].value > r.trend[i - 1].value);
    }
  }
  SUBCASE("klt data") {
    auto mu = klt_measure(g, {{{0.5, 0.5}, 0.5}});
    CoercivityOptions k;
    k.alpha_hint = 0.5;
    CHECK(coercivity_probe(0.8, mu, omega, k).pass);
    CHECK_FALSE(coercivity_probe(1.2, mu, omega, k).pass);
  }
}

TEST_CASE("Moser-Trudinger fit") {
  Grid g(32);
  auto omega = BackgroundForm::lebesgue(g);
  auto leb = Measure::lebesgue(g);
  MTOptions opt;
  opt.coercivity.alpha_hint = 1.0;
  auto r = mt_constant_fit(leb, omega, opt);
  CHECK(std::abs(r.a_fit - 0.25) <= 0.02);
  CHECK(r.frostman_coefficient == doctest::Approx(0.25).epsilon(0.05));
  CHECK(std::isfinite(r.C_fit));
  CHECK_FALSE(r.witness.empty());

  // The fitted inequality holds on fresh probes.
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    ScalarField u = normalize_against(2.0 * random_bandlimited(g, rng), omega);
    double z = 0;
    for (std::size_t k = 0; k < g.size(); ++k) z += std::exp(u[k]) * g.cell_area();
    CHECK(std::log(z) <= r.a_fit * dirichlet(u, u) + r.C_fit + 1e-9);
  }

  auto sharp = mt_sharpness(0.20, leb, omega);
  CHECK(sharp.violated);
  CHECK(sharp.slope > 0.0);
  CHECK_FALSE(mt_sharpness(r.a_fit, leb, omega).violated);
}
