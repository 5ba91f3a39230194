#include "mfe/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfe {

namespace {

constexpr double kPi = std::numbers::pi;

// Largest admissible value at node (i, j) given its neighbours: the node equation
// rho + n^2 (S - 4 v) / 4pi >= 0 rearranged for v.
double local_cap(const ScalarField& v, const BackgroundForm& omega, int i, int j, double h2) {
  const double s = v.at(i + 1, j) + v.at(i - 1, j) + v.at(i, j + 1) + v.at(i, j - 1);
  return 0.25 * (s + 4 * kPi * h2 * omega.rho.at(i, j));
}

}  // namespace

double lcp_residual(const ScalarField& obstacle, const ScalarField& v, const BackgroundForm& omega) {
  const ScalarField ma = ma_density(v, omega);
  double r = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    r = std::max(r, std::abs(std::min(obstacle[k] - v[k], ma[k])));
  }
  return r;
}

EnvelopeResult psh_project(const ScalarField& obstacle, const BackgroundForm& omega,
                           const EnvelopeOptions& options) {
  if (!(obstacle.grid() == omega.grid())) throw InvalidArgument("inputs live on different grids");
  if (!obstacle.all_finite()) throw InvalidArgument("obstacle must be finite");
  if (!(options.relaxation > 0.0 && options.relaxation < 2.0)) {
    throw InvalidArgument("relaxation must lie in (0, 2)");
  }
  const Grid& grid = obstacle.grid();
  const int n = grid.n_side();
  const double h2 = grid.cell_area();

  // Projected Gauss-Seidel converges monotonically from the obstacle itself.
  ScalarField v = obstacle;

  double residual = lcp_residual(obstacle, v, omega);
  int it = 0;
  const int check_every = 10;
  while (residual > options.tolerance && it < options.max_iter) {
    for (int color = 0; color < 2; ++color) {
      for (int j = 0; j < n; ++j) {
        for (int i = (j + color) % 2; i < n; i += 2) {
          const std::size_t k = grid.index(i, j);
          const double target = local_cap(v, omega, i, j, h2);
          v[k] = std::min(obstacle[k], v[k] + options.relaxation * (target - v[k]));
        }
      }
    }
    ++it;
    if (it % check_every == 0) residual = lcp_residual(obstacle, v, omega);
  }
  residual = lcp_residual(obstacle, v, omega);
  if (residual > options.tolerance) throw LcpNonConvergence(residual, it);

  std::vector<bool> contact(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    contact[k] = obstacle[k] - v[k] <= options.contact_tolerance;
  }
  return {make_potential(std::move(v), omega), std::move(contact), residual, it};
}

EnvelopeResult envelope_zero(const BackgroundForm& omega, const EnvelopeOptions& options) {
  EnvelopeResult r = psh_project(ScalarField(omega.grid()), omega, options);
  const ScalarField ma = ma_density(r.Pu.u, omega);
  for (std::size_t k = 0; k < ma.size(); ++k) {
    if (!r.contact_set[k] && std::abs(ma[k]) > options.contact_tolerance) {
      throw LcpNonConvergence(std::abs(ma[k]), r.iterations);
    }
  }
  return r;
}

double orthogonality_residual(const ScalarField& obstacle, const BackgroundForm& omega,
                              const EnvelopeOptions& options) {
  const EnvelopeResult r = psh_project(obstacle, omega, options);
  const ScalarField ma = ma_density(r.Pu.u, omega);
  return std::abs(integral(ma, obstacle - r.Pu.u));
}

}  // namespace mfe
