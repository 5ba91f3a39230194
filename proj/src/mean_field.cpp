#include "mfe/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfe/envelope.hpp"

namespace mfe {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_inputs(const Measure& mu0, const BackgroundForm& omega) {
  if (!(mu0.grid() == omega.grid())) throw InvalidArgument("measure and form live on different grids");
  if (std::abs(mu0.total_mass() - 1.0) > 1e-10) throw InvalidArgument("mu0 must be normalized");
}

// Gibbs node masses q_k = e^{beta u_k} m0_k / Z, and log Z.
std::vector<double> gibbs_masses(const ScalarField& u, double beta, const Measure& mu0,
                                 double* log_z = nullptr) {
  const auto m0 = mu0.node_mass();
  double top = -kInf;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (m0[k] > 0.0) top = std::max(top, beta * u[k]);
  }
  std::vector<double> q(u.size(), 0.0);
  double z = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (m0[k] > 0.0) {
      q[k] = std::exp(beta * u[k] - top) * m0[k];
      z += q[k];
    }
  }
  for (double& v : q) v /= z;
  if (log_z) *log_z = std::log(z) + top;
  return q;
}

double residual_of(const ScalarField& u, double beta, const Measure& mu0,
                   const BackgroundForm& omega) {
  const ScalarField ma = ma_density(u, omega);
  const double inv_area = 1.0 / u.grid().cell_area();
  if (beta == 0.0) {
    const auto m0 = mu0.node_mass();
    double r = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) r = std::max(r, std::abs(ma[k] - m0[k] * inv_area));
    return r;
  }
  const auto q = gibbs_masses(u, beta, mu0);
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) r = std::max(r, std::abs(ma[k] - q[k] * inv_area));
  return std::isfinite(r) ? r : kInf;
}

ScalarField zero_mean(ScalarField u) {
  u -= u.mean();
  return u;
}

// E(u) + L_beta(u) straight from the formula, defined for any grid field.
double ding_formula(const ScalarField& u, double beta, const Measure& mu0,
                    const BackgroundForm& omega) {
  double log_z = 0.0;
  gibbs_masses(u, beta, mu0, &log_z);
  return integral(u, omega.rho) - 0.5 * dirichlet(u, u) - log_z / beta;
}

struct Snapshot {
  double residual = kInf;
  double F = kNaN;
  double G = kNaN;
  double gap = kInf;
};

Snapshot snapshot(const ScalarField& u, double beta, const Measure& mu0,
                  const BackgroundForm& omega, double tol_psh) {
  Snapshot s;
  if (!u.all_finite()) return s;
  s.residual = residual_of(u, beta, mu0, omega);
  const Potential p = make_potential(u, omega);
  if (!p.admissible(tol_psh)) {
    s.G = beta != 0.0 ? ding_formula(u, beta, mu0, omega) : kNaN;
    return s;
  }
  const Measure mu = ma_measure(p, omega, tol_psh);
  if (beta == 0.0) {
    s.F = measure_energy(mu, omega);
    s.G = energy_E(p, omega, tol_psh) - integrate(u, mu0);
    s.gap = std::abs(s.F - s.G);
    return s;
  }
  s.F = free_energy_F(mu, mu0, beta, omega);
  s.G = ding_G(p, mu0, beta, omega, tol_psh);
  s.gap = beta > 0 ? s.F - s.G : s.G - s.F;
  if (std::isnan(s.gap)) s.gap = kInf;
  return s;
}

bool diverging(const std::vector<HistoryRow>& history) {
  const double r = history.back().residual;
  if (!std::isfinite(r)) return true;
  if (history.size() <= 50) return false;
  return r > 10.0 * history[history.size() - 51].residual;
}

SolveResult finish(ScalarField u, double beta, const BackgroundForm& omega,
                   std::vector<HistoryRow> history, SolveVerdict verdict, std::string method) {
  Potential p = make_potential(std::move(u), omega);
  // Non-admissible final iterates (diverged runs) still get a measure for reporting.
  ScalarField d = ma_density(p.u, omega);
  for (double& v : d.values()) v = std::max(v, 0.0);
  Measure mu = Measure::from_density(std::move(d));
  const double res = history.empty() ? kInf : history.back().residual;
  const double gap = history.empty() ? kInf : history.back().gap;
  const int iters = history.empty() ? 0 : history.back().iter;
  return SolveResult{std::move(p), std::move(mu), res, gap, beta, iters, std::move(history),
                     verdict, std::move(method), std::nullopt};
}

double dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Newton matrix (negated Hessian of G per unit area):
//   A d = -laplacian(d)/4pi + beta (q d - q <q, d>) / h^2.
ScalarField newton_apply(const ScalarField& d, const std::vector<double>& q, double beta) {
  ScalarField out = laplacian(d);
  out *= -1.0 / (4 * kPi);
  double qd = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) qd += q[k] * d[k];
  const double scale = beta / d.grid().cell_area();
  for (std::size_t k = 0; k < d.size(); ++k) out[k] += scale * q[k] * (d[k] - qd);
  return out;
}

// Preconditioned CG on the zero-mean subspace.
ScalarField newton_direction(const ScalarField& rhs, const std::vector<double>& q, double beta,
                             double rel_tol) {
  ScalarField x(rhs.grid());
  ScalarField r = zero_mean(rhs);
  const double r0 = std::sqrt(dot(r, r));
  if (r0 == 0.0) return x;
  ScalarField z = shifted_poisson_solve(r, beta);
  ScalarField p = z;
  double rz = dot(r, z);
  for (int it = 0; it < 1000; ++it) {
    const ScalarField ap = newton_apply(p, q, beta);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double a = rz / pap;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += a * p[k];
      r[k] -= a * ap[k];
    }
    r -= r.mean();
    if (std::sqrt(dot(r, r)) <= rel_tol * r0) break;
    z = shifted_poisson_solve(r, beta);
    const double rz_next = dot(r, z);
    const double b = rz_next / rz;
    rz = rz_next;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = z[k] + b * p[k];
  }
  return zero_mean(std::move(x));
}

std::optional<CoercivityReport> precheck(double beta, const Measure& mu0,
                                         const BackgroundForm& omega, bool override_flag,
                                         std::optional<double> alpha_hint) {
  if (beta >= 0.0 || override_flag) return std::nullopt;
  CoercivityOptions opt;
  opt.alpha_hint = alpha_hint;
  return coercivity_probe(-beta, mu0, omega, opt);
}

SolveResult coercivity_failure(double beta, const Measure& mu0, const BackgroundForm& omega,
                               const ScalarField& u0, double tol_psh, CoercivityReport report) {
  std::vector<HistoryRow> history;
  const Snapshot s = snapshot(u0, beta, mu0, omega, tol_psh);
  history.push_back({0, s.residual, s.F, s.G, s.gap});
  SolveResult r = finish(u0, beta, omega, std::move(history),
                         SolveVerdict::CoercivityFailed, "none");
  r.coercivity = std::move(report);
  return r;
}

}  // namespace

const char* to_string(SolveVerdict v) {
  switch (v) {
    case SolveVerdict::Converged:
      return "Converged";
    case SolveVerdict::MaxIter:
      return "MaxIter";
    case SolveVerdict::Diverged:
      return "Diverged";
    case SolveVerdict::CoercivityFailed:
      return "CoercivityFailed";
  }
  return "MaxIter";
}

ScalarField gibbs_density(const ScalarField& u, double beta, const Measure& mu0) {
  if (!(u.grid() == mu0.grid())) throw InvalidArgument("field and measure live on different grids");
  const auto q = gibbs_masses(u, beta, mu0);
  ScalarField d(u.grid());
  const double inv_area = 1.0 / u.grid().cell_area();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = q[k] * inv_area;
  return d;
}

double residual(const Potential& u, double beta, const Measure& mu0, const BackgroundForm& omega) {
  check_inputs(mu0, omega);
  require_psh(u);
  return residual_of(u.u, beta, mu0, omega);
}

SolveResult solve(double beta, const Measure& mu0, const BackgroundForm& omega,
                  const SolverParams& params) {
  params.validate();
  check_inputs(mu0, omega);
  if (!std::isfinite(beta)) throw InvalidArgument("beta must be finite");
  const Grid& grid = mu0.grid();
  const double tol_psh = params.epsilon_psh.value_or(default_psh_tolerance(grid));

  ScalarField u = params.initial ? zero_mean(*params.initial) : ScalarField(grid);
  if (!(u.grid() == grid)) throw InvalidArgument("initial potential lives on a different grid");

  std::vector<HistoryRow> history;
  if (beta == 0.0) {
    u = potential_of_measure(mu0, omega).u;
    const Snapshot s = snapshot(u, beta, mu0, omega, tol_psh);
    history.push_back({0, s.residual, s.F, s.G, s.gap});
    const bool ok = s.residual <= params.tol_residual && s.gap <= params.tol_gap;
    return finish(std::move(u), beta, omega, std::move(history),
                  ok ? SolveVerdict::Converged : SolveVerdict::MaxIter, "poisson");
  }

  auto report = precheck(beta, mu0, omega, params.override_coercivity, params.alpha_hint);
  if (report && !report->pass) {
    return coercivity_failure(beta, mu0, omega, u, tol_psh, std::move(*report));
  }

  SolverMethod method = params.method;
  if (method == SolverMethod::Auto) method = beta > 2.0 ? SolverMethod::Newton : SolverMethod::FixedPoint;
  if (method == SolverMethod::Newton && beta < 0.0) {
    throw InvalidArgument("Newton's method needs beta > 0 (G is concave only there)");
  }

  SolveVerdict verdict = SolveVerdict::MaxIter;
  if (method == SolverMethod::FixedPoint) {
    double damping = params.damping.value_or(beta > 0.0 ? 1.0 : 0.3);
    for (int it = 0;; ++it) {
      const Snapshot s = snapshot(u, beta, mu0, omega, tol_psh);
      history.push_back({it, s.residual, s.F, s.G, s.gap});
      if (s.residual <= params.tol_residual && s.gap <= params.tol_gap) {
        verdict = SolveVerdict::Converged;
        break;
      }
      if (diverging(history)) {
        verdict = SolveVerdict::Diverged;
        break;
      }
      if (it >= params.max_iter) break;
      if (history.size() >= 2 && s.residual > history[history.size() - 2].residual) {
        damping = std::max(damping / 2, 1.0 / 1024);
      }
      const Measure g = Measure::from_density(gibbs_density(u, beta, mu0));
      const ScalarField target = potential_of_measure(g, omega).u;
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = (1 - damping) * u[k] + damping * target[k];
      u -= u.mean();
    }
  } else {
    for (int it = 0;; ++it) {
      const Snapshot s = snapshot(u, beta, mu0, omega, tol_psh);
      history.push_back({it, s.residual, s.F, s.G, s.gap});
      if (s.residual <= params.tol_residual && s.gap <= params.tol_gap) {
        verdict = SolveVerdict::Converged;
        break;
      }
      if (diverging(history)) {
        verdict = SolveVerdict::Diverged;
        break;
      }
      if (it >= params.max_iter) break;
      const auto q = gibbs_masses(u, beta, mu0);
      ScalarField rhs = ma_density(u, omega);
      const double inv_area = 1.0 / grid.cell_area();
      for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] -= q[k] * inv_area;
      const double forcing = std::clamp(s.residual, 1e-12, 0.1);
      const ScalarField dir = newton_direction(rhs, q, beta, forcing);
      const double slope = dot(rhs, dir) * grid.cell_area();
      const double g0 = ding_formula(u, beta, mu0, omega);
      double t = 1.0;
      ScalarField trial = u;
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] + t * dir[k];
        const double g1 = ding_formula(trial, beta, mu0, omega);
        const double slack = 1e-14 * (1.0 + std::abs(g0));
        if (g1 >= g0 + 1e-4 * t * slope - slack) break;
        // Near the optimum G is flat to rounding; fall back on the residual.
        if (residual_of(trial, beta, mu0, omega) < 0.5 * s.residual) break;
        t *= 0.5;
      }
      u = zero_mean(std::move(trial));
    }
  }
  SolveResult r = finish(std::move(u), beta, omega, std::move(history), verdict,
                         method == SolverMethod::Newton ? "newton" : "fixed_point");
  r.coercivity = std::move(report);
  return r;
}

namespace {

struct MassState {
  std::vector<double> m;
  ScalarField u;           // zero-mean potential of m
  double F = 0.0;
  std::vector<double> g;   // dF/dm
  double spread = 0.0;     // sup |g - <g, m>| over the support of mu0
};

MassState mass_state(std::vector<double> m, double beta, const Measure& mu0,
                     const BackgroundForm& omega) {
  const Grid& grid = omega.grid();
  const double inv_area = 1.0 / grid.cell_area();
  ScalarField rhs(grid);
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = 4 * kPi * (m[k] * inv_area - omega.rho[k]);
  ScalarField u = poisson_solve(rhs);
  double pair = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) pair += u[k] * m[k];
  const double energy = integral(u, omega.rho) - 0.5 * dirichlet(u, u) - pair;
  const auto m0 = mu0.node_mass();
  double d = 0.0;
  std::vector<double> g(m.size(), 0.0);
  double gbar = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m0[k] <= 0.0) continue;
    const double log_ratio = std::log(m[k] / m0[k]);
    if (m[k] > 0.0) d += m[k] * log_ratio;
    g[k] = -u[k] + (log_ratio + 1) / beta;
    gbar += m[k] * g[k];
  }
  double spread = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m0[k] > 0.0) spread = std::max(spread, std::abs(g[k] - gbar));
  }
  return {std::move(m), std::move(u), energy + d / beta, std::move(g), spread};
}

}  // namespace

SolveResult measure_descent(double beta, const Measure& mu0, const BackgroundForm& omega,
                            const DescentParams& params) {
  check_inputs(mu0, omega);
  if (beta == 0.0 || !std::isfinite(beta)) throw InvalidArgument("measure_descent needs finite beta != 0");
  if (!(params.tolerance > 0.0) || params.max_iter < 1 || !(params.initial_step > 0.0)) {
    throw InvalidArgument("invalid descent parameters");
  }
  const Grid& grid = mu0.grid();
  const double tol_psh = default_psh_tolerance(grid);
  auto report = precheck(beta, mu0, omega, params.override_coercivity, params.alpha_hint);
  if (report && !report->pass) {
    return coercivity_failure(beta, mu0, omega, ScalarField(grid), tol_psh, std::move(*report));
  }

  const auto m0 = mu0.node_mass();
  const double sgn = beta > 0 ? 1.0 : -1.0;
  MassState state = mass_state(std::vector<double>(m0.begin(), m0.end()), beta, mu0, omega);
  double eta = params.initial_step;
  std::vector<HistoryRow> history;
  SolveVerdict verdict = SolveVerdict::MaxIter;
  for (int it = 0;; ++it) {
    const double res = residual_of(state.u, beta, mu0, omega);
    const double G = ding_formula(state.u, beta, mu0, omega);
    const double gap = beta > 0 ? state.F - G : G - state.F;
    history.push_back({it, res, state.F, G, gap});
    if (state.spread <= params.tolerance) {
      verdict = SolveVerdict::Converged;
      break;
    }
    if (it >= params.max_iter) break;

    const double phi = sgn * state.F;
    // F is only known to rounding; once the decrease drops below that level, a step is
    // judged by the gradient spread instead.
    const double noise = 1e-13 * (1.0 + std::abs(phi));
    bool accepted = false;
    while (eta > 1e-14) {
      const auto& g = state.g;
      double top = -kInf;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (m0[k] > 0.0) top = std::max(top, -eta * sgn * g[k]);
      }
      std::vector<double> next(g.size(), 0.0);
      double z = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (m0[k] > 0.0) {
          next[k] = state.m[k] * std::exp(-eta * sgn * g[k] - top);
          z += next[k];
        }
      }
      double lin = 0.0, kl = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        next[k] /= z;
        if (next[k] > 0.0) {
          lin += sgn * g[k] * (next[k] - state.m[k]);
          kl += next[k] * std::log(next[k] / state.m[k]);
        }
      }
      MassState cand = mass_state(std::move(next), beta, mu0, omega);
      const double phi_next = sgn * cand.F;
      const bool sufficient = phi_next <= phi + lin + kl / eta && phi_next <= phi;
      const bool flat = std::abs(phi_next - phi) <= noise && cand.spread < state.spread;
      if (sufficient || flat) {
        state = std::move(cand);
        eta *= 1.5;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;
  }

  ScalarField density(grid);
  const double inv_area = 1.0 / grid.cell_area();
  for (std::size_t k = 0; k < density.size(); ++k) density[k] = state.m[k] * inv_area;
  Potential p = make_potential(std::move(state.u), omega);
  const double res = history.back().residual;
  const double gap = history.back().gap;
  const int iters = history.back().iter;
  return SolveResult{std::move(p), Measure::from_density(std::move(density)), res, gap, beta,
                     iters, std::move(history), verdict, "mirror_descent", std::move(report)};
}

SweepResult beta_infinity_sweep(const std::vector<double>& betas, const Measure& mu0,
                                const BackgroundForm& omega, const SolverParams& params) {
  check_inputs(mu0, omega);
  if (betas.empty()) throw InvalidArgument("beta sweep needs at least one beta");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0) || (i > 0 && !(betas[i] > betas[i - 1]))) {
      throw InvalidArgument("sweep betas must be positive and strictly increasing");
    }
  }
  SweepResult out{{}, envelope_zero(omega).Pu.u, {}};
  std::optional<ScalarField> warm = params.initial;
  for (double beta : betas) {
    SolverParams p = params;
    p.beta = beta;
    p.initial = warm;
    const SolveResult r = solve(beta, mu0, omega, p);
    warm = r.u_star.u;
    double log_z = 0.0;
    gibbs_masses(r.u_star.u, beta, mu0, &log_z);
    // v = u - (1/beta) log int e^{beta u} mu0 satisfies int e^{beta v} mu0 = 1.
    ScalarField v = r.u_star.u - log_z / beta;
    double top = -kInf;
    for (double x : v.values()) top = std::max(top, beta * x);
    double moment = 0.0;
    const auto m0 = mu0.node_mass();
    for (std::size_t k = 0; k < v.size(); ++k) moment += std::exp(beta * v[k] - top) * m0[k];
    const double norm_err = std::abs(std::exp(std::log(moment) + top) - 1.0);
    const ScalarField diff = v - out.envelope;
    out.rows.push_back({beta, l1_norm(diff), max_abs(diff), v.max(), norm_err, r.verdict,
                        r.iterations});
    out.solutions.push_back(std::move(v));
  }
  return out;
}

}  // namespace mfe
