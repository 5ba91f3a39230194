#pragma once

// Probability measures on the grid, optionally carrying analytic pole factors
//     density(x) = normalization * base(x) * prod_i d(x, p_i)^(-2 c_i)
// where d is the smooth periodic distance surrogate of log_dist2. Every measure is stored
// as node masses m_j = normalization * base_j * int phi_j prod_i d^(-2 c_i) dA, so that
// sum_j f_j m_j integrates the bilinear interpolant of f exactly (up to quadrature error).

#include <span>
#include <vector>

#include "mfe/grid.hpp"
#include "mfe/quadrature.hpp"

namespace mfe {

struct Pole {
  Point center;
  double exponent = 0.0;  // c; integrable iff c < 1
};

class Measure {
 public:
  static Measure lebesgue(Grid grid);
  /// Grid density (no poles); normalized to unit mass. Requires density >= 0.
  static Measure from_density(ScalarField density);
  /// Throws KltViolation if some exponent is >= 1.
  static Measure with_poles(ScalarField base, std::vector<Pole> poles);

  const Grid& grid() const { return base_.grid(); }
  const ScalarField& base() const { return base_; }
  std::span<const Pole> poles() const { return poles_; }
  bool has_poles() const { return !poles_.empty(); }
  double normalization() const { return normalization_; }

  std::span<const double> node_mass() const { return mass_; }
  double mass(std::size_t k) const { return mass_[k]; }
  double total_mass() const;
  /// Node masses divided by the cell area.
  ScalarField density() const;

  double pole_factor(Point x, Point offset = {}) const;
  /// Pointwise density normalization * interpolated base * pole factor at x + offset.
  double density_at(Point x, Point offset = {}) const;

 private:
  Measure(ScalarField base, std::vector<Pole> poles, double normalization,
          std::vector<double> mass)
      : base_(std::move(base)),
        poles_(std::move(poles)),
        normalization_(normalization),
        mass_(std::move(mass)) {}

  ScalarField base_;
  std::vector<Pole> poles_;
  double normalization_;
  std::vector<double> mass_;
};

/// <f, mu> = sum_j f_j m_j.
double integrate(const ScalarField& f, const Measure& mu);

/// mu(B_r(center)) from the pointwise density, in polar coordinates about center.
double ball_mass(const Measure& mu, Point center, double radius);

/// u(x) = coefficient * log d^2(x, center).
struct LogPole {
  Point center;
  double coefficient = 1.0;
};

/// A grid field plus declared logarithmic poles: u = smooth + sum_k kappa_k log d^2(., x_k).
struct PoleField {
  ScalarField smooth;
  std::vector<LogPole> log_poles;

  explicit PoleField(ScalarField s, std::vector<LogPole> poles = {})
      : smooth(std::move(s)), log_poles(std::move(poles)) {}

  double value_at(Point x) const;
  /// Node values; -inf (or +inf) at nodes that coincide with a pole.
  ScalarField node_values() const;
  /// Maximum over grid nodes. Only meaningful when all coefficients are >= 0.
  double sup() const;
};

enum class IntegralVerdict { Bounded, Diverging, Inconclusive };

const char* to_string(IntegralVerdict v);

struct ExpMoment {
  IntegralVerdict verdict = IntegralVerdict::Bounded;
  double log_value = 0.0;  // log int e^{s u} dmu; +inf when diverging
  double ratio = 0.0;      // worst asymptotic annulus ratio over the singular points
  /// Partial integrals after each reporting level (annuli grouped evenly), relative to
  /// the scale exp(shift), where shift is stored alongside.
  std::vector<double> partial_sums;
  double shift = 0.0;
};

struct ExpMomentOptions {
  int annuli = 24;
  int report_levels = 6;
  double ratio_drift_tol = 1e-3;
};

/// int e^{s u} dmu with pole-aware refinement; classifies integrability from the
/// asymptotic ratio of successive dyadic annulus contributions.
ExpMoment exp_moment(const PoleField& u, double s, const Measure& mu,
                     const ExpMomentOptions& options = {});

}  // namespace mfe
