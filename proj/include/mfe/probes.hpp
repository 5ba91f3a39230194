#pragma once

// Reproducible families of test potentials and measures shared by the estimators and the
// test suites.

#include <random>

#include "mfe/functionals.hpp"

namespace mfe {

/// Zero-mean trigonometric field sum_{|k|,|l| <= max_mode} a_kl e^{2 pi i (kx + ly)} with
/// Gaussian coefficients damped like 1/(1 + |k|^2 + |l|^2), scaled to max |f| = 1.
ScalarField random_bandlimited(const Grid& grid, std::mt19937_64& rng, int max_mode = 4);

/// Probability measure with density proportional to exp(amplitude * random_bandlimited).
Measure random_measure(const Grid& grid, std::mt19937_64& rng, double amplitude = 1.0,
                       int max_mode = 4);

/// Potential of a random measure plus a random constant: admissible for any omega.
Potential random_admissible(const BackgroundForm& omega, std::mt19937_64& rng,
                            double amplitude = 1.0, int max_mode = 4);

/// Normalized periodic Gaussian bump of width eps about center, as a measure.
Measure bump_measure(const Grid& grid, Point center, double eps);

/// Potential of bump_measure: a regularized Green function with pole at center.
Potential regularized_green(const BackgroundForm& omega, Point center, double eps);

/// Analytic pole model of the Green function: g = log_dist2(., x0) + c0 + h_omega with
/// laplacian(h_omega)/4pi = 1 - rho_omega, normalized so that int g omega = 0 on the grid.
PoleField green_pole_model(const BackgroundForm& omega, Point x0);

/// Shift u by a constant so that sum u rho_omega dA = 0.
ScalarField normalize_against(ScalarField u, const BackgroundForm& omega);

}  // namespace mfe
