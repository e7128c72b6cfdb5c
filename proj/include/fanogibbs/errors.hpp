#pragma once

#include <stdexcept>
#include <string>

namespace fanogibbs {

// Thrown when a grid or basis request cannot be resolved at the given
// resolution (too coarse, ill-conditioned Gram, ...).
struct UnderResolvedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a potential leaves the positive-curvature cone.
struct CurvatureError : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown when an iterative solver fails its own convergence test.
struct NonConvergenceError : std::runtime_error {
  double best_residual = 0.0;
  NonConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), best_residual(residual) {}
};

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace fanogibbs
