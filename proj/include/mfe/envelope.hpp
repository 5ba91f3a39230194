#pragma once

// The psh envelope P u = sup{v admissible : v <= u}. At complex dimension one this is the
// obstacle problem
//     min(obstacle - v, rho_omega + laplacian(v)/4pi) = 0   at every node,
// solved by red-black projected SOR.

#include <vector>

#include "mfe/functionals.hpp"

namespace mfe {

struct EnvelopeOptions {
  double relaxation = 1.7;
  double tolerance = 1e-9;      // on the complementarity residual
  double contact_tolerance = 1e-8;
  int max_iter = 200000;
};

struct EnvelopeResult {
  Potential Pu;
  std::vector<bool> contact_set;  // obstacle - Pu <= contact_tolerance
  double lcp_residual = 0.0;
  int iterations = 0;
};

/// Throws LcpNonConvergence when the residual is still above tolerance after max_iter sweeps.
EnvelopeResult psh_project(const ScalarField& obstacle, const BackgroundForm& omega,
                           const EnvelopeOptions& options = {});

/// P(0). Also checks that MA(P0) vanishes off the contact set.
EnvelopeResult envelope_zero(const BackgroundForm& omega, const EnvelopeOptions& options = {});

/// max_j |min(obstacle_j - v_j, ma_density(v)_j)|.
double lcp_residual(const ScalarField& obstacle, const ScalarField& v, const BackgroundForm& omega);

/// |sum ma_density(Pu) (obstacle - Pu) dA|.
double orthogonality_residual(const ScalarField& obstacle, const BackgroundForm& omega,
                              const EnvelopeOptions& options = {});

}  // namespace mfe
