#pragma once

// Discrete dd^c calculus on the flat unit torus.
//
// Conventions: d^c = i(-d + dbar)/4pi so the dd^c density of u is (Laplacian u)/4pi,
// the torus has unit area, and
//     int du ^ d^c v = (1/4pi) int grad u . grad v.
// The Laplacian is the periodic five-point stencil scaled by n_side^2.

#include "mfe/grid.hpp"

namespace mfe {

/// Density of the reference (1,1)-form omega against the flat area element. It may change
/// sign; only the total mass is constrained (V = 1).
struct BackgroundForm {
  ScalarField rho;
  double V = 1.0;

  static BackgroundForm lebesgue(Grid grid);
  /// rho = 1 + amplitude * cos(2 pi x).
  static BackgroundForm cosine(Grid grid, double amplitude);
  /// Validates the unit total mass to 1e-12.
  static BackgroundForm from_density(ScalarField rho);

  const Grid& grid() const { return rho.grid(); }
  bool is_positive() const { return rho.min() >= 0.0; }
};

ScalarField laplacian(const ScalarField& u);

/// Discrete eigenvalue of the stencil on the Fourier mode (k, l).
double laplacian_eigenvalue(int n_side, int k, int l);

/// Zero-mean u with laplacian(u) = f, by spectral inversion of the stencil.
/// Throws NonZeroMeanRHS when |mean(f)| > tol_mean.
ScalarField poisson_solve(const ScalarField& f, double tol_mean = 1e-10);

/// Solve (-laplacian/4pi + shift) u = f on zero-mean fields; used as a preconditioner.
ScalarField shifted_poisson_solve(const ScalarField& f, double shift);

/// int du ^ d^c v  =  -sum u * (laplacian v / 4pi) * cell_area.
double dirichlet(const ScalarField& u, const ScalarField& v);

/// Unit-mass bilinear hat at x0, as a node density (mass / cell_area).
ScalarField hat_dirac(Grid grid, Point x0);

/// Exact Green function of the flat unit square torus for the Lebesgue form:
///   dd^c G = delta_0 - dA,   int G dA = 0,   G(z) = log|z|^2 + c0 - pi|z|^2 + O(|z|^4).
/// Built from the Jacobi theta function theta_1 at nome exp(-pi).
double torus_green(double dx, double dy);
double torus_green(Point x, Point pole);
/// Constant c0 in the small-|z| expansion of torus_green.
double torus_green_offset();

/// Smooth periodic surrogate for log d^2(x, p): torus_green(x, p) - c0. It agrees with the
/// log of the squared flat distance up to O(d^2) near p and has constant Laplacian away from p.
double log_dist2(Point x, Point pole);
/// log_dist2 at anchor + offset, keeping full precision for tiny offsets from the pole.
double log_dist2(Point anchor, Point offset, Point pole);

/// Grid Green function: laplacian(g)/4pi = hat_dirac(x0) - rho_omega, shifted so that
/// sum g * rho * cell_area = 0.
ScalarField green_function(Point x0, const BackgroundForm& omega);

}  // namespace mfe
