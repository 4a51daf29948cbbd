#pragma once

#include <Eigen/Dense>
#include <functional>

namespace curvebic {

struct SimplexOptions {
  double edge = 0.5;        // initial simplex edge length
  int max_iterations = 2000;
  double ftol_rel = 1e-9;   // relative spread of simplex values at convergence
};

struct SimplexResult {
  Eigen::VectorXd x;
  double fmin = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization, derivative-free.
SimplexResult minimize_simplex(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x0, const SimplexOptions& opts = {});

}  // namespace curvebic
