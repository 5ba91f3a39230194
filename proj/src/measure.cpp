#include "mfe/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfe/torus_grid.hpp"

namespace mfe {

namespace {

struct Singularity {
  Point center;
  double exponent;  // weight behaves like d^(-2 exponent)
};

void add_singularity(std::vector<Singularity>& list, Point center, double exponent) {
  for (auto& s : list) {
    if (torus_distance(s.center, center) < 1e-12) {
      s.exponent += exponent;
      return;
    }
  }
  list.push_back({center, exponent});
}

quad::Weight power_weight(const std::vector<Singularity>& sing) {
  return [sing](Point anchor, Point offset) {
    double log_w = 0.0;
    for (const auto& s : sing) {
      if (s.exponent != 0.0) log_w -= s.exponent * log_dist2(anchor, offset, s.center);
    }
    return std::exp(log_w);
  };
}

std::vector<Point> centers(const std::vector<Singularity>& sing) {
  std::vector<Point> out;
  out.reserve(sing.size());
  for (const auto& s : sing) out.push_back(s.center);
  return out;
}

}  // namespace

Measure Measure::lebesgue(Grid grid) { return from_density(ScalarField(grid, 1.0)); }

Measure Measure::from_density(ScalarField density) {
  if (!density.all_finite() || density.min() < 0.0) {
    throw InvalidArgument("measure density must be finite and nonnegative");
  }
  const double total = integral(density);
  if (!(total > 0.0)) throw InvalidArgument("measure density has zero mass");
  const double area = density.grid().cell_area();
  std::vector<double> mass(density.size());
  for (std::size_t k = 0; k < density.size(); ++k) mass[k] = density[k] * area / total;
  return Measure(std::move(density), {}, 1.0 / total, std::move(mass));
}

Measure Measure::with_poles(ScalarField base, std::vector<Pole> poles) {
  if (poles.empty()) return from_density(std::move(base));
  for (const auto& p : poles) {
    if (!(p.exponent < 1.0)) {
      throw KltViolation("pole exponent " + std::to_string(p.exponent) +
                         " violates the klt condition c < 1");
    }
  }
  for (std::size_t a = 0; a < poles.size(); ++a) {
    for (std::size_t b = a + 1; b < poles.size(); ++b) {
      if (torus_distance(poles[a].center, poles[b].center) < 1e-12) {
        throw InvalidArgument("pole centers must be pairwise distinct");
      }
    }
  }
  if (!base.all_finite() || base.min() < 0.0) {
    throw InvalidArgument("measure base must be finite and nonnegative");
  }
  std::vector<Singularity> sing;
  for (const auto& p : poles) add_singularity(sing, p.center, p.exponent);
  const auto pts = centers(sing);
  quad::HatMoments hm = quad::hat_moments(base.grid(), pts, power_weight(sing));
  // Per-hat geometric tails below the innermost annulus.
  for (const auto& trace : hm.traces) {
    for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
      const auto& lv = trace.levels[i];
      const double a1 = lv[lv.size() - 1], a2 = lv[lv.size() - 2];
      if (a1 != 0.0 && a2 != 0.0) {
        const double r = a1 / a2;
        if (r > 0.0 && r < 1.0) hm.weights[trace.nodes[i]] += a1 * r / (1.0 - r);
      }
    }
  }
  std::vector<double> mass(base.size());
  double total = 0.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    mass[k] = base[k] * hm.weights[k];
    total += mass[k];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidArgument("measure with poles has no finite positive mass");
  }
  for (double& m : mass) m /= total;
  return Measure(std::move(base), std::move(poles), 1.0 / total, std::move(mass));
}

double Measure::total_mass() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

ScalarField Measure::density() const {
  ScalarField d(grid());
  const double inv = 1.0 / grid().cell_area();
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = mass_[k] * inv;
  return d;
}

double Measure::pole_factor(Point x, Point offset) const {
  double log_w = 0.0;
  for (const auto& p : poles_) log_w -= p.exponent * log_dist2(x, offset, p.center);
  return std::exp(log_w);
}

double Measure::density_at(Point x, Point offset) const {
  return normalization_ * base_.interpolate({x.x + offset.x, x.y + offset.y}) *
         pole_factor(x, offset);
}

double integrate(const ScalarField& f, const Measure& mu) {
  if (!(f.grid() == mu.grid())) throw InvalidArgument("field and measure live on different grids");
  const auto m = mu.node_mass();
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (m[k] != 0.0) s += f[k] * m[k];
  }
  return s;
}

double ball_mass(const Measure& mu, Point center, double radius) {
  return quad::disk_integral(center, radius, [&mu](Point a, Point o) { return mu.density_at(a, o); });
}

double PoleField::value_at(Point x) const {
  double v = smooth.interpolate(x);
  for (const auto& p : log_poles) v += p.coefficient * log_dist2(x, p.center);
  return v;
}

ScalarField PoleField::node_values() const {
  ScalarField out = smooth;
  const Grid& g = smooth.grid();
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (const auto& p : log_poles) out[k] += p.coefficient * log_dist2(g.node(k), p.center);
  }
  return out;
}

double PoleField::sup() const {
  const ScalarField v = node_values();
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v.values()) {
    if (std::isfinite(x)) m = std::max(m, x);
  }
  return m;
}

const char* to_string(IntegralVerdict v) {
  switch (v) {
    case IntegralVerdict::Bounded:
      return "Bounded";
    case IntegralVerdict::Diverging:
      return "Diverging";
    case IntegralVerdict::Inconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

ExpMoment exp_moment(const PoleField& u, double s, const Measure& mu,
                     const ExpMomentOptions& options) {
  if (!(u.smooth.grid() == mu.grid())) {
    throw InvalidArgument("field and measure live on different grids");
  }
  const Grid& grid = mu.grid();
  std::vector<Singularity> sing;
  for (const auto& p : mu.poles()) add_singularity(sing, p.center, p.exponent);
  for (const auto& p : u.log_poles) add_singularity(sing, p.center, -s * p.coefficient);

  ExpMoment result;
  result.shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    result.shift = std::max(result.shift, s * u.smooth[k]);
  }
  std::vector<double> factor(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    factor[k] = mu.normalization() * mu.base()[k] * std::exp(s * u.smooth[k] - result.shift);
  }

  quad::HatOptions hopt;
  hopt.levels = options.annuli;
  const auto pts = centers(sing);
  const quad::HatMoments hm = quad::hat_moments(grid, pts, power_weight(sing), hopt);

  double partial = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) partial += factor[k] * hm.weights[k];

  double tail = 0.0;
  bool diverging = false, unsettled = false;
  std::vector<double> inner_sums(options.report_levels, 0.0);
  for (const auto& trace : hm.traces) {
    const quad::TailEstimate est = quad::estimate_tail(trace, factor);
    if (est.annuli.empty()) continue;
    result.ratio = std::max(result.ratio, est.ratio);
    if (!est.summable) {
      diverging = true;
    } else {
      tail += est.tail;
      if (est.ratio_drift > options.ratio_drift_tol) unsettled = true;
    }
    // Contribution of annuli not yet included at each reporting level.
    for (int l = 0; l < options.report_levels; ++l) {
      const int cut = options.annuli * (l + 1) / options.report_levels;
      for (int k = cut; k < options.annuli; ++k) inner_sums[l] += est.annuli[k];
    }
  }
  result.partial_sums.resize(options.report_levels);
  for (int l = 0; l < options.report_levels; ++l) result.partial_sums[l] = partial - inner_sums[l];

  if (diverging) {
    result.verdict = IntegralVerdict::Diverging;
    result.log_value = std::numeric_limits<double>::infinity();
  } else {
    result.verdict = unsettled ? IntegralVerdict::Inconclusive : IntegralVerdict::Bounded;
    result.log_value = std::log(partial + tail) + result.shift;
  }
  return result;
}

}  // namespace mfe
