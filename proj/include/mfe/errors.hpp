#pragma once

#include <stdexcept>
#include <string>

namespace mfe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Poisson right-hand side without zero mean; usually an unnormalized measure upstream.
class NonZeroMeanRHS : public Error {
 public:
  NonZeroMeanRHS(double mean)
      : Error("poisson right-hand side has nonzero mean " + std::to_string(mean)), mean_(mean) {}
  double mean() const { return mean_; }

 private:
  double mean_;
};

/// Potential violates omega + dd^c u >= 0 beyond the configured tolerance.
class NotPsh : public Error {
 public:
  NotPsh(double slack, double tolerance)
      : Error("potential is not omega-psh: slack " + std::to_string(slack) + " < -" +
              std::to_string(tolerance)),
        slack_(slack) {}
  double slack() const { return slack_; }

 private:
  double slack_;
};

class DivergentIntegral : public Error {
 public:
  using Error::Error;
};

class LcpNonConvergence : public Error {
 public:
  LcpNonConvergence(double residual, int iterations)
      : Error("projected Gauss-Seidel did not converge: residual " + std::to_string(residual) +
              " after " + std::to_string(iterations) + " sweeps"),
        residual_(residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A pole exponent c >= 1 makes the measure non-integrable.
class KltViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace mfe
