#pragma once

// Solvers for the normalized mean-field equation
//     MA(u) = e^{beta u} mu0 / int e^{beta u} mu0
// with u in the zero-mean gauge, plus a measure-side descent on F and the beta -> infinity
// sweep towards the envelope P(0).

#include <optional>
#include <string>
#include <vector>

#include "mfe/alpha_mt.hpp"
#include "mfe/functionals.hpp"

namespace mfe {

enum class SolveVerdict { Converged, MaxIter, Diverged, CoercivityFailed };

const char* to_string(SolveVerdict v);

struct HistoryRow {
  int iter = 0;
  double residual = 0.0;
  double F = 0.0;
  double G = 0.0;
  double gap = 0.0;
};

struct SolveResult {
  Potential u_star;
  Measure mu_star;
  double residual_linf = 0.0;
  double gap = 0.0;
  double beta = 0.0;
  int iterations = 0;
  std::vector<HistoryRow> history;
  SolveVerdict verdict = SolveVerdict::MaxIter;
  std::string method;
  /// Present when the beta < 0 coercivity precheck ran.
  std::optional<CoercivityReport> coercivity;
};

/// Gibbs density e^{beta u} mu0 / Z per unit area (node masses over the cell area).
ScalarField gibbs_density(const ScalarField& u, double beta, const Measure& mu0);

/// || ma_density(u) - gibbs_density(u) ||_inf. Invariant under u -> u + c.
double residual(const Potential& u, double beta, const Measure& mu0, const BackgroundForm& omega);

/// beta = 0 solves MA(u) = mu0 directly. beta in (0, 2] and beta < 0 use the damped fixed
/// point u <- (1 - d) u + d * potential_of_measure(gibbs(u)); beta > 2 uses Newton on the
/// concave functional G with a conjugate-gradient inner solve. beta < 0 runs the coercivity
/// precheck first unless params.override_coercivity is set.
SolveResult solve(double beta, const Measure& mu0, const BackgroundForm& omega,
                  const SolverParams& params = {});

struct DescentParams {
  double tolerance = 1e-10;   // on sup |g - <g, mu>| over the support
  int max_iter = 20000;
  double initial_step = 1.0;
  bool override_coercivity = false;
  std::optional<double> alpha_hint;
};

/// Mirror descent of sign(beta) * F over node masses, with the step adapted by a
/// relative-smoothness backtracking test. F is monotone along the accepted iterates.
SolveResult measure_descent(double beta, const Measure& mu0, const BackgroundForm& omega,
                            const DescentParams& params = {});

struct SweepRow {
  double beta = 0.0;
  double l1_dist = 0.0;
  double linf_dist = 0.0;
  double sup_u = 0.0;
  /// | int e^{beta v} mu0 - 1 | for the shifted solution v.
  double normalization_error = 0.0;
  SolveVerdict verdict = SolveVerdict::MaxIter;
  int iterations = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  ScalarField envelope;                 // P(0)
  std::vector<ScalarField> solutions;   // v_beta = u_beta + L_beta(u_beta)
};

/// Solves the non-normalized equation MA(v) = e^{beta v} mu0 for increasing beta, each run
/// warm-started from the previous one, and measures the distance to P(0).
SweepResult beta_infinity_sweep(const std::vector<double>& betas, const Measure& mu0,
                                const BackgroundForm& omega, const SolverParams& params = {});

}  // namespace mfe
