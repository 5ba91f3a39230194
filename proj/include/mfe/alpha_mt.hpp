#pragma once

// Alpha-invariant, Frostman-exponent, coercivity and Moser-Trudinger estimators built on
// probe families of potentials with declared logarithmic poles.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfe/functionals.hpp"
#include "mfe/measure.hpp"

namespace mfe {

/// Normalized measure with density proportional to prod_i d(x, p_i)^(-2 c_i).
/// Throws KltViolation if some c_i >= 1.
Measure klt_measure(const Grid& grid, std::vector<Pole> poles);

struct ExpIntegral {
  IntegralVerdict verdict = IntegralVerdict::Bounded;
  double value = 0.0;      // +inf when diverging
  double log_value = 0.0;
  double ratio = 0.0;      // asymptotic annulus ratio at the worst singular point
  std::vector<double> partial_sums;  // per reporting level, scaled by e^{-shift}
};

/// int e^{-t (u - sup u)} mu0 with pole-aware refinement.
ExpIntegral exp_integral(const PoleField& u, double t, const Measure& mu0);

struct AlphaSample {
  double t = 0.0;
  IntegralVerdict verdict = IntegralVerdict::Bounded;
  std::string probe;                  // probe that decided the verdict
  std::vector<double> partial_sums;   // its refinement trace
};

struct AlphaOptions {
  double t_max = 2.0;
  double width = 0.02;
  int center_grid = 4;   // Green poles at a center_grid x center_grid lattice
  int max_pairs = 4;     // two-pole averages
};

struct AlphaReport {
  double alpha_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<AlphaSample> t_samples;
  std::string probe_family;
  std::vector<int> grid_levels;
  bool inconclusive = false;  // some probe could not be classified
};

AlphaReport alpha_estimate(const Measure& mu0, const BackgroundForm& omega,
                           const AlphaOptions& options = {});

struct FrostmanReport {
  double d_hat = 0.0;
  Point worst_center;
  std::vector<double> radii;
  std::vector<double> worst_masses;
};

FrostmanReport frostman_profile(const Measure& mu0, int center_grid = 8);

/// Minimal local slope of log mu(B_r(x)) against log r over r = 2^-2 .. 2^-6.
double frostman_exponent(const Measure& mu0);

struct TrendPoint {
  double eps = 0.0;
  double value = 0.0;
};

struct CoercivityOptions {
  std::optional<double> alpha_hint;
  double margin = 0.1;
  double j_weight = 0.02;     // coercivity slack: G + j_weight * J must stay bounded
  double slope_tol = 0.02;    // per unit of log(1/eps)
  int random_probes = 16;
  std::uint64_t seed = 1;
  AlphaOptions alpha;
};

struct CoercivityReport {
  bool pass = false;
  double gamma = 0.0;
  double alpha_hat = 0.0;
  double threshold = 0.0;      // (2 - margin) * alpha_hat
  double max_value = 0.0;      // largest G_{-gamma} + j_weight * J over the suite
  std::string witness;         // probe attaining max_value, or the growing family
  std::vector<TrendPoint> trend;  // concentrating regularized Green poles
  double trend_slope = 0.0;
  bool unbounded_trend = false;
};

CoercivityReport coercivity_probe(double gamma, const Measure& mu0, const BackgroundForm& omega,
                                  const CoercivityOptions& options = {});

/// Concentrating family used by the coercivity and Moser-Trudinger checks: widths from 1/8
/// down to two cells in half-octave steps.
std::vector<double> concentration_widths(const Grid& grid);

struct MTOptions {
  CoercivityOptions coercivity;
  double width = 0.02;
  int random_probes = 24;
};

struct MTReport {
  double a_fit = 0.0;
  double C_fit = 0.0;
  std::string witness;
  double gamma_max = 0.0;
  double alpha_hat = 0.0;
  double frostman_d = 0.0;
  /// The coefficient d/2 * 1/4 built from the Frostman exponent, reported alongside.
  double frostman_coefficient = 0.0;
};

MTReport mt_constant_fit(const Measure& mu0, const BackgroundForm& omega,
                         const MTOptions& options = {});

struct SharpnessReport {
  double a = 0.0;
  bool violated = false;
  double scale = 0.0;             // s in u = -s * g_eps
  std::vector<TrendPoint> trend;  // log int e^u mu0 - a dirichlet(u, u)
  double slope = 0.0;
  std::string witness;
};

/// Tests log int e^u mu0 <= a dirichlet(u, u) + C along u = -s g_eps, s = 1/(2a).
SharpnessReport mt_sharpness(double a, const Measure& mu0, const BackgroundForm& omega,
                             double slope_tol = 0.02);

}  // namespace mfe
