#pragma once

// Energy, entropy and free-energy functionals of the mean-field variational problem at
// complex dimension one, where the Monge-Ampere measure is linear:
//     MA(u) = (rho_omega + laplacian(u)/4pi) dA.
//
// Extended values (+inf / -inf) are returned as IEEE infinities, never as exceptions.

#include <optional>

#include "mfe/grid.hpp"
#include "mfe/measure.hpp"
#include "mfe/torus_grid.hpp"

namespace mfe {

/// Default admissibility tolerance 1e-10 * n_side^2.
double default_psh_tolerance(const Grid& grid);

/// A candidate potential together with its admissibility slack
/// min_j (rho_omega + laplacian(u)/4pi)_j.
struct Potential {
  ScalarField u;
  double slack = 0.0;

  bool admissible(double tolerance) const { return slack >= -tolerance; }
};

Potential make_potential(ScalarField u, const BackgroundForm& omega);

/// rho_omega + laplacian(u)/4pi, without any admissibility check.
ScalarField ma_density(const ScalarField& u, const BackgroundForm& omega);

/// Throws NotPsh when the slack is below -tolerance (tolerance <= 0 selects the default).
void require_psh(const Potential& u, double tolerance = 0.0);

/// MA(u) as a measure; negative values within tolerance are clamped and renormalized.
Measure ma_measure(const Potential& u, const BackgroundForm& omega, double tolerance = 0.0);

/// E(u) = int u omega - dirichlet(u, u) / 2.
double energy_E(const Potential& u, const BackgroundForm& omega, double tolerance = 0.0);
/// I(u) = -int u (MA(u) - omega) = dirichlet(u, u).
double aubin_I(const Potential& u, const BackgroundForm& omega, double tolerance = 0.0);
/// J(u) = -E(u) + int u omega = dirichlet(u, u) / 2.
double aubin_J(const Potential& u, const BackgroundForm& omega, double tolerance = 0.0);

/// Zero-mean potential with MA(u) = mu, from the node masses of mu.
Potential potential_of_measure(const Measure& mu, const BackgroundForm& omega);

/// E(mu) = E(u_mu) - <u_mu, mu>.
double measure_energy(const Measure& mu, const BackgroundForm& omega);

/// Relative entropy sum_j m_j log(m_j / m0_j) of the node masses; +inf when mu charges a
/// node where mu0 has (numerically) no density.
double entropy_D(const Measure& mu, const Measure& mu0);

/// -(1/beta) log int e^{beta u} mu0, evaluated with max-subtraction.
double log_moment_L(const ScalarField& u, double beta, const Measure& mu0);
/// Same for a field with declared log poles; throws DivergentIntegral when the pole-refined
/// integral diverges.
double log_moment_L(const PoleField& u, double beta, const Measure& mu0);

/// F = E(mu) + D(mu)/beta, with +inf / -inf sentinels when D is infinite.
double free_energy_F(const Measure& mu, const Measure& mu0, double beta,
                     const BackgroundForm& omega);

/// G = E(u) + L_beta(u).
double ding_G(const Potential& u, const Measure& mu0, double beta, const BackgroundForm& omega,
              double tolerance = 0.0);

/// G(u) - F(MA(u)) for beta < 0 and F(MA(u)) - G(u) for beta > 0; nonnegative, and zero
/// exactly at solutions.
double duality_gap(const Potential& u, const Measure& mu0, double beta,
                   const BackgroundForm& omega, double tolerance = 0.0);

/// K(u) = beta * F(MA(u)).
double mabuchi_K(const Potential& u, const Measure& mu0, double beta,
                 const BackgroundForm& omega, double tolerance = 0.0);

/// Gibbs measure e^{beta u} mu0 / Z as node masses.
Measure gibbs_measure(const ScalarField& u, double beta, const Measure& mu0);

struct FunctionalReport {
  double E = 0.0;
  double I = 0.0;
  double J = 0.0;
  double D = 0.0;
  double L = 0.0;
  double F = 0.0;
  double G = 0.0;
  double K = 0.0;
  double beta = 0.0;
};

FunctionalReport evaluate_functionals(const Potential& u, const Measure& mu0, double beta,
                                      const BackgroundForm& omega, double tolerance = 0.0);

enum class SolverMethod { Auto, FixedPoint, Newton };

struct SolverParams {
  double beta = 1.0;
  double tol_residual = 1e-9;
  double tol_gap = 1e-10;
  int max_iter = 5000;
  /// Fixed-point damping in (0, 1]; unset selects 1.0 for beta > 0 and 0.3 for beta < 0.
  std::optional<double> damping;
  /// Admissibility tolerance; unset selects default_psh_tolerance.
  std::optional<double> epsilon_psh;
  SolverMethod method = SolverMethod::Auto;
  /// Run beta < 0 even when the coercivity precheck fails.
  bool override_coercivity = false;
  /// Alpha invariant used by the coercivity precheck; estimated when unset.
  std::optional<double> alpha_hint;
  /// Starting potential; zero when unset.
  std::optional<ScalarField> initial;

  void validate() const;
};

}  // namespace mfe
