#include "mfe/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mfe {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grids(const Grid& a, const Grid& b) {
  if (!(a == b)) throw InvalidArgument("inputs live on different grids");
}

double resolve_tolerance(const Grid& grid, double tolerance) {
  return tolerance > 0.0 ? tolerance : default_psh_tolerance(grid);
}

// log sum_j e^{s u_j} m_j, with the maximum exponent pulled out.
double log_sum_exp(const ScalarField& u, double s, std::span<const double> mass) {
  double top = -kInf;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (mass[k] > 0.0) top = std::max(top, s * u[k]);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (mass[k] > 0.0) sum += std::exp(s * u[k] - top) * mass[k];
  }
  return std::log(sum) + top;
}

}  // namespace

double default_psh_tolerance(const Grid& grid) {
  const double n = grid.n_side();
  return 1e-10 * n * n;
}

ScalarField ma_density(const ScalarField& u, const BackgroundForm& omega) {
  check_grids(u.grid(), omega.grid());
  ScalarField d = laplacian(u);
  d *= 1.0 / (4 * kPi);
  d += omega.rho;
  return d;
}

Potential make_potential(ScalarField u, const BackgroundForm& omega) {
  const double slack = ma_density(u, omega).min();
  return {std::move(u), slack};
}

void require_psh(const Potential& u, double tolerance) {
  const double tol = resolve_tolerance(u.u.grid(), tolerance);
  if (!u.admissible(tol)) throw NotPsh(u.slack, tol);
}

Measure ma_measure(const Potential& u, const BackgroundForm& omega, double tolerance) {
  require_psh(u, tolerance);
  ScalarField d = ma_density(u.u, omega);
  for (double& v : d.values()) v = std::max(v, 0.0);
  return Measure::from_density(std::move(d));
}

double energy_E(const Potential& u, const BackgroundForm& omega, double tolerance) {
  require_psh(u, tolerance);
  check_grids(u.u.grid(), omega.grid());
  return integral(u.u, omega.rho) - 0.5 * dirichlet(u.u, u.u);
}

double aubin_I(const Potential& u, const BackgroundForm& omega, double tolerance) {
  require_psh(u, tolerance);
  check_grids(u.u.grid(), omega.grid());
  return dirichlet(u.u, u.u);
}

double aubin_J(const Potential& u, const BackgroundForm& omega, double tolerance) {
  return -energy_E(u, omega, tolerance) + integral(u.u, omega.rho);
}

Potential potential_of_measure(const Measure& mu, const BackgroundForm& omega) {
  check_grids(mu.grid(), omega.grid());
  ScalarField rhs = mu.density();
  rhs -= omega.rho;
  rhs *= 4 * kPi;
  ScalarField u = poisson_solve(rhs);
  return make_potential(std::move(u), omega);
}

double measure_energy(const Measure& mu, const BackgroundForm& omega) {
  const Potential u = potential_of_measure(mu, omega);
  // Potentials of measures are admissible by construction; skip the rounding-level check.
  const double e = integral(u.u, omega.rho) - 0.5 * dirichlet(u.u, u.u);
  return e - integrate(u.u, mu);
}

double entropy_D(const Measure& mu, const Measure& mu0) {
  check_grids(mu.grid(), mu0.grid());
  const auto m = mu.node_mass();
  const auto m0 = mu0.node_mass();
  const double floor = 1e-300 * mu.grid().cell_area();
  double d = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k] <= 0.0) continue;
    if (m0[k] < floor) return kInf;
    d += m[k] * std::log(m[k] / m0[k]);
  }
  return std::max(d, 0.0);
}

double log_moment_L(const ScalarField& u, double beta, const Measure& mu0) {
  if (beta == 0.0) throw InvalidArgument("log_moment_L requires beta != 0");
  check_grids(u.grid(), mu0.grid());
  return -log_sum_exp(u, beta, mu0.node_mass()) / beta;
}

double log_moment_L(const PoleField& u, double beta, const Measure& mu0) {
  if (beta == 0.0) throw InvalidArgument("log_moment_L requires beta != 0");
  const ExpMoment m = exp_moment(u, beta, mu0);
  if (m.verdict == IntegralVerdict::Diverging) {
    throw DivergentIntegral("exponential moment diverges at beta = " + std::to_string(beta));
  }
  return -m.log_value / beta;
}

double free_energy_F(const Measure& mu, const Measure& mu0, double beta,
                     const BackgroundForm& omega) {
  if (beta == 0.0) throw InvalidArgument("free_energy_F requires beta != 0");
  const double d = entropy_D(mu, mu0);
  if (std::isinf(d)) return beta > 0 ? kInf : -kInf;
  return measure_energy(mu, omega) + d / beta;
}

double ding_G(const Potential& u, const Measure& mu0, double beta, const BackgroundForm& omega,
              double tolerance) {
  return energy_E(u, omega, tolerance) + log_moment_L(u.u, beta, mu0);
}

double duality_gap(const Potential& u, const Measure& mu0, double beta,
                   const BackgroundForm& omega, double tolerance) {
  const double g = ding_G(u, mu0, beta, omega, tolerance);
  const double f = free_energy_F(ma_measure(u, omega, tolerance), mu0, beta, omega);
  return beta < 0 ? g - f : f - g;
}

double mabuchi_K(const Potential& u, const Measure& mu0, double beta,
                 const BackgroundForm& omega, double tolerance) {
  return beta * free_energy_F(ma_measure(u, omega, tolerance), mu0, beta, omega);
}

Measure gibbs_measure(const ScalarField& u, double beta, const Measure& mu0) {
  check_grids(u.grid(), mu0.grid());
  const auto m0 = mu0.node_mass();
  const double log_z = log_sum_exp(u, beta, m0);
  ScalarField d(u.grid());
  const double inv_area = 1.0 / u.grid().cell_area();
  for (std::size_t k = 0; k < u.size(); ++k) {
    d[k] = m0[k] > 0.0 ? std::exp(beta * u[k] - log_z) * m0[k] * inv_area : 0.0;
  }
  return Measure::from_density(std::move(d));
}

FunctionalReport evaluate_functionals(const Potential& u, const Measure& mu0, double beta,
                                      const BackgroundForm& omega, double tolerance) {
  FunctionalReport r;
  r.beta = beta;
  r.E = energy_E(u, omega, tolerance);
  r.I = aubin_I(u, omega, tolerance);
  r.J = aubin_J(u, omega, tolerance);
  const Measure mu = ma_measure(u, omega, tolerance);
  r.D = entropy_D(mu, mu0);
  if (beta != 0.0) {
    r.L = log_moment_L(u.u, beta, mu0);
    r.G = r.E + r.L;
    r.F = free_energy_F(mu, mu0, beta, omega);
    r.K = beta * r.F;
  } else {
    // At beta = 0 the free energy degenerates to the pluricomplex energy alone.
    r.L = -integrate(u.u, mu0);
    r.G = r.E + r.L;
    r.F = measure_energy(mu, omega);
    r.K = r.D;
  }
  return r;
}

void SolverParams::validate() const {
  if (!(tol_residual > 0.0) || !(tol_gap > 0.0)) {
    throw InvalidArgument("solver tolerances must be positive");
  }
  if (max_iter < 1) throw InvalidArgument("solver max_iter must be >= 1");
  if (damping && !(*damping > 0.0 && *damping <= 1.0)) {
    throw InvalidArgument("solver damping must lie in (0, 1]");
  }
  if (epsilon_psh && !(*epsilon_psh > 0.0)) {
    throw InvalidArgument("epsilon_psh must be positive");
  }
}

}  // namespace mfe
