#pragma once

#include <functional>

#include "curvebic/types.hpp"

namespace curvebic {

using LoglikFn = std::function<double(const Eigen::VectorXd&)>;

/// Gaussian linear model by least squares; sigma2_hat uses divisor n (MLE).
LinearFit fit_linear(const Dataset& data, const ModelSpec& spec);

/// Balanced one-way hierarchical normal model: per-group means and pooled
/// variance with divisor p*r.
HierarchicalFit fit_hierarchical_normal(const GroupedDataset& data);

/// Linear mixed model with diagonal random-effect covariance. Beta is profiled
/// by generalized least squares; variance components are optimized on the log
/// scale by Nelder-Mead and reported on the variance scale.
MixedFit fit_lmm(const GroupedDataset& data, const ModelSpec& spec);

/// GLMM (binomial or Poisson) with random intercept plus at most one random
/// slope; the marginal likelihood integrates each group's random effects by
/// adaptive Gauss-Hermite quadrature centered at the per-group posterior mode.
/// With a random slope the intercept/slope covariance is a full 2x2 with
/// correlation parameter.
GlmmFit fit_glmm(const GroupedDataset& data, const ModelSpec& spec, Family family, int n_agq);

/// Log-likelihood of theta in the documented per-family ordering, for
/// curvature evaluation at (or near) the MLE.
LoglikFn linear_loglik(const Dataset& data, const ModelSpec& spec);
LoglikFn hierarchical_loglik(const GroupedDataset& data);
LoglikFn lmm_loglik(const GroupedDataset& data, const ModelSpec& spec);
LoglikFn glmm_loglik(const GroupedDataset& data, const ModelSpec& spec, Family family, int n_agq);

/// Marginal Gaussian log-likelihood for given variance components (beta
/// profiled out). Exposed for the LMM optimizer and tests.
double lmm_profile_loglik(const GroupedDataset& data, const ModelSpec& spec,
                          const Eigen::VectorXd& re_variances, double sigma2_eps,
                          Eigen::VectorXd* beta_out = nullptr);

inline constexpr double kVarianceLowerBound = 1e-10;

}  // namespace curvebic
