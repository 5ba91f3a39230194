#include "mfe/probes.hpp"

#include <cmath>
#include <numbers>

namespace mfe {

namespace {
constexpr double kPi = std::numbers::pi;
}

ScalarField random_bandlimited(const Grid& grid, std::mt19937_64& rng, int max_mode) {
  std::normal_distribution<double> n01;
  ScalarField f(grid);
  for (int k = -max_mode; k <= max_mode; ++k) {
    for (int l = 0; l <= max_mode; ++l) {
      if (l == 0 && k <= 0) continue;  // one of each +-(k, l) pair, no constant
      const double damp = 1.0 / (1.0 + k * k + l * l);
      const double a = n01(rng) * damp, b = n01(rng) * damp;
      for (std::size_t idx = 0; idx < f.size(); ++idx) {
        const Point p = grid.node(idx);
        const double phase = 2 * kPi * (k * p.x + l * p.y);
        f[idx] += a * std::cos(phase) + b * std::sin(phase);
      }
    }
  }
  const double m = max_abs(f);
  if (m > 0.0) f *= 1.0 / m;
  return f;
}

Measure random_measure(const Grid& grid, std::mt19937_64& rng, double amplitude, int max_mode) {
  ScalarField d = random_bandlimited(grid, rng, max_mode);
  for (double& v : d.values()) v = std::exp(amplitude * v);
  return Measure::from_density(std::move(d));
}

Potential random_admissible(const BackgroundForm& omega, std::mt19937_64& rng, double amplitude,
                            int max_mode) {
  const Measure mu = random_measure(omega.grid(), rng, amplitude, max_mode);
  Potential p = potential_of_measure(mu, omega);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  p.u += shift(rng);
  return p;
}

Measure bump_measure(const Grid& grid, Point center, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("bump width must be positive");
  ScalarField d = ScalarField::sample(grid, [&](double x, double y) {
    const double dx = wrap_delta(x - center.x), dy = wrap_delta(y - center.y);
    return std::exp(-(dx * dx + dy * dy) / (2 * eps * eps));
  });
  return Measure::from_density(std::move(d));
}

Potential regularized_green(const BackgroundForm& omega, Point center, double eps) {
  return potential_of_measure(bump_measure(omega.grid(), center, eps), omega);
}

PoleField green_pole_model(const BackgroundForm& omega, Point x0) {
  const Grid& grid = omega.grid();
  ScalarField rhs = ScalarField(grid, 1.0) - omega.rho;
  rhs *= 4 * kPi;
  ScalarField smooth = poisson_solve(rhs);
  smooth += torus_green_offset();
  PoleField g(std::move(smooth), {{x0, 1.0}});
  // int g omega = int smooth rho + int log_dist2 (rho - 1) - c0, using int torus_green dA = 0.
  const double pairing = integral(g.smooth, omega.rho);
  const double area = grid.cell_area();
  double pole_part = -torus_green_offset();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double l = log_dist2(grid.node(k), x0);
    if (std::isfinite(l)) pole_part += l * (omega.rho[k] - 1.0) * area;
  }
  g.smooth -= pairing + pole_part;
  return g;
}

ScalarField normalize_against(ScalarField u, const BackgroundForm& omega) {
  u -= integral(u, omega.rho);
  return u;
}

}  // namespace mfe
