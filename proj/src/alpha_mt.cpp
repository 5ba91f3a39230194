#include "mfe/alpha_mt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mfe/probes.hpp"

namespace mfe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Probe {
  std::string label;
  PoleField u;
};

std::string point_label(Point p) {
  std::ostringstream os;
  os.precision(4);
  os << "(" << p.x << "," << p.y << ")";
  return os.str();
}

// Least-squares slope of ys against xs.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Unbounded growth: positive fitted slope in log(1/eps) and increasing over the last three
// widths.
bool growing(const std::vector<TrendPoint>& trend, double slope, double slope_tol) {
  if (trend.size() < 3 || slope <= slope_tol) return false;
  const std::size_t n = trend.size();
  return trend[n - 1].value > trend[n - 2].value && trend[n - 2].value > trend[n - 3].value;
}

double trend_slope(const std::vector<TrendPoint>& trend) {
  std::vector<double> xs, ys;
  for (const auto& p : trend) {
    xs.push_back(std::log(1.0 / p.eps));
    ys.push_back(p.value);
  }
  return fit_slope(xs, ys);
}

std::vector<Point> concentration_centers(const Measure& mu0) {
  std::vector<Point> out;
  for (const auto& p : mu0.poles()) out.push_back(p.center);
  out.push_back({0.5, 0.5});
  return out;
}

std::vector<Probe> alpha_probes(const Measure& mu0, const BackgroundForm& omega,
                                const AlphaOptions& options) {
  std::vector<Probe> probes;
  std::vector<Point> centers;
  for (const auto& p : mu0.poles()) centers.push_back(p.center);
  const int m = options.center_grid;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) centers.push_back({(i + 0.5) / m, (j + 0.5) / m});
  }
  std::vector<PoleField> single;
  for (const Point c : centers) {
    single.push_back(green_pole_model(omega, c));
    probes.push_back({"green" + point_label(c), single.back()});
  }
  // Two-pole averages, pairing klt poles first with the lattice.
  int pairs = 0;
  for (std::size_t a = 0; a < centers.size() && pairs < options.max_pairs; ++a) {
    const std::size_t b = (a + centers.size() / 2 + 1) % centers.size();
    if (a == b) continue;
    PoleField avg(0.5 * (single[a].smooth + single[b].smooth),
                  {{centers[a], 0.5}, {centers[b], 0.5}});
    probes.push_back({"pair" + point_label(centers[a]) + point_label(centers[b]), std::move(avg)});
    ++pairs;
  }
  return probes;
}

}  // namespace

Measure klt_measure(const Grid& grid, std::vector<Pole> poles) {
  return Measure::with_poles(ScalarField(grid, 1.0), std::move(poles));
}

ExpIntegral exp_integral(const PoleField& u, double t, const Measure& mu0) {
  const ExpMoment m = exp_moment(u, -t, mu0);
  ExpIntegral r;
  r.verdict = m.verdict;
  r.ratio = m.ratio;
  r.partial_sums = m.partial_sums;
  if (m.verdict == IntegralVerdict::Diverging) {
    r.log_value = kInf;
    r.value = kInf;
  } else {
    r.log_value = m.log_value + t * u.sup();
    r.value = std::exp(r.log_value);
  }
  return r;
}

AlphaReport alpha_estimate(const Measure& mu0, const BackgroundForm& omega,
                           const AlphaOptions& options) {
  if (!(options.width > 0.0) || !(options.t_max > 0.0)) {
    throw InvalidArgument("alpha bisection needs positive width and range");
  }
  const std::vector<Probe> probes = alpha_probes(mu0, omega, options);
  AlphaReport report;
  report.grid_levels = {mu0.grid().n_side()};
  {
    std::ostringstream os;
    os << "green poles on a " << options.center_grid << "x" << options.center_grid
       << " lattice + klt pole centers (" << mu0.poles().size() << ") + "
       << (probes.size() - options.center_grid * options.center_grid - mu0.poles().size())
       << " two-pole averages";
    report.probe_family = os.str();
  }

  // Verdict for all probes at exponent t; the first non-bounded probe decides.
  auto classify = [&](double t) {
    AlphaSample s;
    s.t = t;
    double worst_ratio = -1.0;
    for (const auto& p : probes) {
      const ExpIntegral e = exp_integral(p.u, t, mu0);
      if (e.verdict != IntegralVerdict::Bounded) {
        s.verdict = e.verdict;
        s.probe = p.label;
        s.partial_sums = e.partial_sums;
        if (e.verdict == IntegralVerdict::Inconclusive) report.inconclusive = true;
        return s;
      }
      if (e.ratio > worst_ratio) {
        worst_ratio = e.ratio;
        s.probe = p.label;
        s.partial_sums = e.partial_sums;
      }
    }
    s.verdict = IntegralVerdict::Bounded;
    return s;
  };

  double lo = 0.0, hi = options.t_max;
  AlphaSample top = classify(hi);
  report.t_samples.push_back(top);
  if (top.verdict == IntegralVerdict::Bounded) {
    report.alpha_hat = report.lower = report.upper = hi;
    return report;
  }
  while (hi - lo > options.width) {
    const double mid = 0.5 * (lo + hi);
    AlphaSample s = classify(mid);
    // Inconclusive integrals are treated as unbounded so the estimate stays a lower bound.
    if (s.verdict == IntegralVerdict::Bounded) lo = mid;
    else hi = mid;
    report.t_samples.push_back(std::move(s));
  }
  std::sort(report.t_samples.begin(), report.t_samples.end(),
            [](const AlphaSample& a, const AlphaSample& b) { return a.t < b.t; });
  report.lower = lo;
  report.upper = hi;
  report.alpha_hat = 0.5 * (lo + hi);
  return report;
}

FrostmanReport frostman_profile(const Measure& mu0, int center_grid) {
  std::vector<Point> centers;
  for (int j = 0; j < center_grid; ++j) {
    for (int i = 0; i < center_grid; ++i) {
      centers.push_back({(i + 0.5) / center_grid, (j + 0.5) / center_grid});
    }
  }
  for (const auto& p : mu0.poles()) centers.push_back(p.center);

  FrostmanReport report;
  for (int k = 2; k <= 6; ++k) report.radii.push_back(std::ldexp(1.0, -k));
  std::vector<double> log_r;
  for (double r : report.radii) log_r.push_back(std::log(r));

  report.d_hat = kInf;
  for (const Point c : centers) {
    std::vector<double> masses, log_m;
    for (double r : report.radii) {
      masses.push_back(ball_mass(mu0, c, r));
      log_m.push_back(std::log(masses.back()));
    }
    const double slope = fit_slope(log_r, log_m);
    if (slope < report.d_hat) {
      report.d_hat = slope;
      report.worst_center = c;
      report.worst_masses = masses;
    }
  }
  return report;
}

double frostman_exponent(const Measure& mu0) { return frostman_profile(mu0).d_hat; }

std::vector<double> concentration_widths(const Grid& grid) {
  std::vector<double> out;
  const double floor = 2.0 * grid.spacing();
  for (double eps = 0.125; eps >= floor * (1 - 1e-12); eps /= std::sqrt(2.0)) out.push_back(eps);
  return out;
}

CoercivityReport coercivity_probe(double gamma, const Measure& mu0, const BackgroundForm& omega,
                                  const CoercivityOptions& options) {
  if (!(gamma > 0.0)) throw InvalidArgument("coercivity probe needs gamma > 0");
  const Grid& grid = mu0.grid();
  const double beta = -gamma;
  CoercivityReport report;
  report.gamma = gamma;
  report.alpha_hat = options.alpha_hint ? *options.alpha_hint
                                        : alpha_estimate(mu0, omega, options.alpha).alpha_hat;
  report.threshold = (2.0 - options.margin) * report.alpha_hat;
  report.max_value = -kInf;

  auto value = [&](const Potential& u) {
    return ding_G(u, mu0, beta, omega) + options.j_weight * aubin_J(u, omega);
  };
  auto consider = [&](const Potential& u, const std::string& label) {
    const double v = value(u);
    if (v > report.max_value) {
      report.max_value = v;
      report.witness = label;
    }
  };

  std::mt19937_64 rng(options.seed);
  const double amplitudes[] = {0.5, 1.0, 2.0, 4.0};
  for (int i = 0; i < options.random_probes; ++i) {
    const double a = amplitudes[i % 4];
    consider(random_admissible(omega, rng, a), "random#" + std::to_string(i));
  }
  // Scaled grid Green functions stay admissible for t <= 1 when omega >= 0.
  if (omega.is_positive()) {
    for (const Point c : concentration_centers(mu0)) {
      const ScalarField g = green_function(c, omega);
      for (double t : {0.25, 0.5, 0.75, 1.0}) {
        const Potential u = make_potential(t * g, omega);
        if (u.admissible(default_psh_tolerance(grid))) {
          consider(u, "grid_green" + point_label(c) + "*" + std::to_string(t));
        }
      }
    }
  }
  // Concentrating regularized Green poles; keep the fastest-growing center.
  report.trend_slope = -kInf;
  for (const Point c : concentration_centers(mu0)) {
    std::vector<TrendPoint> trend;
    for (double eps : concentration_widths(grid)) {
      const Potential u = regularized_green(omega, c, eps);
      const double v = value(u);
      trend.push_back({eps, v});
      consider(u, "regularized_green" + point_label(c) + " eps=" + std::to_string(eps));
    }
    const double slope = trend_slope(trend);
    if (slope > report.trend_slope) {
      report.trend_slope = slope;
      report.trend = std::move(trend);
      report.unbounded_trend = growing(report.trend, slope, options.slope_tol);
      if (report.unbounded_trend) report.witness = "regularized_green" + point_label(c) + " as eps -> 0";
    }
  }
  report.pass = gamma < report.threshold && !report.unbounded_trend;
  return report;
}

MTReport mt_constant_fit(const Measure& mu0, const BackgroundForm& omega,
                         const MTOptions& options) {
  const Grid& grid = mu0.grid();
  MTReport report;
  CoercivityOptions copt = options.coercivity;
  report.alpha_hat = copt.alpha_hint ? *copt.alpha_hint
                                     : alpha_estimate(mu0, omega, copt.alpha).alpha_hat;
  copt.alpha_hint = report.alpha_hat;

  // sup{gamma : coercivity_probe passes} by bisection.
  double lo = 0.0, hi = 2.0 * report.alpha_hat + options.width;
  while (hi - lo > options.width) {
    const double mid = 0.5 * (lo + hi);
    if (coercivity_probe(mid, mu0, omega, copt).pass) lo = mid;
    else hi = mid;
  }
  report.gamma_max = 0.5 * (lo + hi);
  report.a_fit = 1.0 / (2.0 * report.gamma_max);
  report.frostman_d = frostman_exponent(mu0);
  report.frostman_coefficient = report.frostman_d / 8.0;

  // C_fit: largest log int e^u mu0 - a dirichlet(u, u) over the probe suite, with every
  // probe normalized so that int u omega = 0.
  report.C_fit = -kInf;
  auto consider = [&](ScalarField u, const std::string& label) {
    u = normalize_against(std::move(u), omega);
    const double v = -log_moment_L(u, 1.0, mu0) - report.a_fit * dirichlet(u, u);
    if (v > report.C_fit) {
      report.C_fit = v;
      report.witness = label;
    }
  };
  std::mt19937_64 rng(options.coercivity.seed);
  const double amplitudes[] = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  for (int i = 0; i < options.random_probes; ++i) {
    const double a = amplitudes[i % 6];
    consider(a * random_bandlimited(grid, rng, 1 + i % 5), "bandlimited#" + std::to_string(i));
  }
  const auto centers = concentration_centers(mu0);
  for (const Point c : centers) {
    for (double eps : concentration_widths(grid)) {
      const ScalarField g = regularized_green(omega, c, eps).u;
      for (double s : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
        consider(-s * g, "scaled_green" + point_label(c) + " s=" + std::to_string(s) +
                             " eps=" + std::to_string(eps));
      }
      // Dipole against the antipodal point.
      const Point far{wrap_unit(c.x + 0.5), wrap_unit(c.y + 0.5)};
      const ScalarField dip = g - regularized_green(omega, far, eps).u;
      for (double s : {0.5, 1.0, 2.0}) {
        consider(-s * dip, "dipole" + point_label(c) + point_label(far) + " s=" +
                               std::to_string(s) + " eps=" + std::to_string(eps));
      }
    }
  }
  return report;
}

SharpnessReport mt_sharpness(double a, const Measure& mu0, const BackgroundForm& omega,
                             double slope_tol) {
  if (!(a > 0.0)) throw InvalidArgument("Moser-Trudinger coefficient must be positive");
  SharpnessReport report;
  report.a = a;
  report.scale = 1.0 / (2.0 * a);
  report.slope = -kInf;
  for (const Point c : concentration_centers(mu0)) {
    std::vector<TrendPoint> trend;
    for (double eps : concentration_widths(mu0.grid())) {
      ScalarField u = normalize_against(-report.scale * regularized_green(omega, c, eps).u, omega);
      trend.push_back({eps, -log_moment_L(u, 1.0, mu0) - a * dirichlet(u, u)});
    }
    const double slope = trend_slope(trend);
    if (slope > report.slope) {
      report.slope = slope;
      report.trend = std::move(trend);
      report.witness = "-" + std::to_string(report.scale) + " * regularized_green" + point_label(c);
    }
  }
  report.violated = growing(report.trend, report.slope, slope_tol);
  return report;
}

}  // namespace mfe
