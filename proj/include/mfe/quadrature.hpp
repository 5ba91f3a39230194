#pragma once

// Sub-cell quadrature of bilinear hat functions against analytic weights with isolated
// power/log singularities.
//
// For every node j the engine computes W_j = int phi_j(x) w(x) dA, where phi_j is the
// bilinear hat at node j. Since the hats form a partition of unity, sum_j f_j W_j is the
// exact integral of the bilinear interpolant of f against w.
//
// Cells away from the singular points use tensor Gauss-Legendre rules whose order grows as
// the singularity gets closer. Cells within `near_cells` of a singular point are integrated
// in polar coordinates about it. Polar pieces that reach the singular point itself are cut
// into dyadic annuli r in [R 2^-(k+1), R 2^-k], k = 0..levels-1; the per-annulus
// contributions form the refinement trace used to decide integrability.

#include <functional>
#include <span>
#include <vector>

#include "mfe/grid.hpp"

namespace mfe::quad {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule.
const GaussLegendre& gauss_legendre(int n);

/// Annulus contributions around one singular point, split by the hat they belong to.
struct LevelTrace {
  Point point;
  std::vector<std::size_t> nodes;
  std::vector<std::vector<double>> levels;  // levels[i][k]: hat nodes[i], annulus k
};

struct HatMoments {
  std::vector<double> weights;  // without the inner tail below the last annulus
  std::vector<LevelTrace> traces;
};

struct HatOptions {
  int levels = 48;
  double near_cells = 2.0;
  int polar_angular = 8;
  int polar_radial = 6;
};

/// Weight evaluated at anchor + offset. Polar rules pass the singular point as the anchor
/// and the (possibly tiny) displacement as the offset, so no precision is lost near it.
using Weight = std::function<double(Point anchor, Point offset)>;

HatMoments hat_moments(const Grid& grid, std::span<const Point> singular, const Weight& weight,
                       const HatOptions& options = {});

/// Summary of a refinement trace contracted against nodal factors.
struct TailEstimate {
  std::vector<double> annuli;  // A_k = sum_i factor[nodes[i]] * levels[i][k]
  double ratio = 0.0;          // A_{K-1} / A_{K-2}
  double ratio_drift = 0.0;    // |ratio - A_{K-2}/A_{K-3}|
  double tail = 0.0;           // geometric remainder below the last annulus, when summable
  bool summable = true;
};

TailEstimate estimate_tail(const LevelTrace& trace, std::span<const double> node_factor);

/// Integral of a polar-defined function over the disk of given radius about center,
/// with the center treated as a possible singularity (dyadic annuli plus geometric tail).
double disk_integral(Point center, double radius, const Weight& f, int angular = 64,
                     int levels = 60);

}  // namespace mfe::quad
