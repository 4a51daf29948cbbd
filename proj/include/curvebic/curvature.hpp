#pragma once

#include <functional>

#include "curvebic/types.hpp"

namespace curvebic {

struct HessianConfig {
  double regularization_ridge = 0.0;  // added to diag(J) before factorization
  bool symmetrize = true;
  double step_scale = 1.0;  // multiplies the default per-coordinate step
};

/// Central-difference Hessian of loglik at theta_hat; step per coordinate is
/// step_scale * eps^(1/4) * max(1, |theta_j|). The quarter-root step balances
/// truncation against the subtractive rounding of second differences.
Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd&)>& loglik,
                                  const Eigen::VectorXd& theta_hat,
                                  const HessianConfig& cfg = {});

/// Forms J = -H (+ ridge I), factors it, and reports log|J| plus PD
/// diagnostics. Throws NotPositiveDefinite when the factorization fails with
/// ridge = 0.
CurvatureResult log_det_information(const Eigen::MatrixXd& hessian, const HessianConfig& cfg = {});

/// Closed-form log|J| for the balanced one-way hierarchical normal model:
/// (p+1) log r + log p - log 2 - (p+2) log sigma2_hat.
double hierarchical_logdet_closed_form(int p, int r, double sigma2_hat);

}  // namespace curvebic
