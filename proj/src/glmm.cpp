#include <cmath>
#include <limits>
#include <memory>

#include "curvebic/core.hpp"
#include "curvebic/fitters.hpp"
#include "curvebic/math_util.hpp"
#include "curvebic/simplex.hpp"

namespace curvebic {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double obs_loglik(Family family, double y, double eta) {
  if (family == Family::GLMMBinomial) {
    // y in {0,1}; stable Bernoulli log-likelihood
    double a = eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
    double b = eta >= 0 ? -eta - std::log1p(std::exp(-eta)) : -std::log1p(std::exp(eta));
    return y * a + (1.0 - y) * b;
  }
  if (eta > 35.0) return kNegInf;  // Poisson mean overflow guard
  return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
}

// mean and GLM weight for the canonical link
void mean_weight(Family family, double eta, double& mu, double& w) {
  if (family == Family::GLMMBinomial) {
    mu = 1.0 / (1.0 + std::exp(-eta));
    w = mu * (1.0 - mu);
  } else {
    mu = std::exp(std::min(eta, 35.0));
    w = mu;
  }
}

struct GlmmLayout {
  Eigen::MatrixXd X;   // n x pf fixed design
  Eigen::MatrixXd Z;   // n x q random design (intercept first)
  std::vector<std::vector<int>> groups;
  Eigen::VectorXd y;
  Family family = Family::GLMMBinomial;
  int n_agq = 5;
  Eigen::VectorXd gh_nodes, gh_weights;
};

GlmmLayout glmm_layout(const GroupedDataset& data, const ModelSpec& spec, Family family,
                       int n_agq) {
  if (n_agq < 5) throw DomainError("nAGQ must be at least 5");
  if (!spec.intercept_random)
    throw DomainError("glmm requires a random intercept");
  if (spec.random_columns.size() > 1)
    throw DomainError("glmm supports at most one random slope");

  GlmmLayout L;
  L.X = build_design(data.base, spec.fixed_columns, spec.intercept_fixed);
  const int n = data.n();
  const int q = 1 + static_cast<int>(spec.random_columns.size());
  L.Z.resize(n, q);
  L.Z.col(0).setOnes();
  if (q == 2) L.Z.col(1) = data.column(spec.random_columns[0]);
  L.groups = data.group_rows;
  L.y = data.base.y;
  L.family = family;
  L.n_agq = n_agq;
  gauss_hermite(n_agq, L.gh_nodes, L.gh_weights);
  return L;
}

// joint log density of one group's data and random effect u
double group_joint(const GlmmLayout& L, const std::vector<int>& rows, const Eigen::VectorXd& xb,
                   const Eigen::MatrixXd& prec_u, double logdet_sigma_u,
                   const Eigen::VectorXd& u) {
  const int q = static_cast<int>(u.size());
  double ll = 0.0;
  for (int row : rows) {
    double eta = xb(row) + L.Z.row(row).head(q).dot(u);
    double v = obs_loglik(L.family, L.y(row), eta);
    if (!std::isfinite(v)) return kNegInf;
    ll += v;
  }
  ll += -0.5 * (q * kLog2Pi + logdet_sigma_u + u.dot(prec_u * u));
  return ll;
}

// Laplace mode of the group's joint density via Newton iterations.
Eigen::VectorXd group_mode(const GlmmLayout& L, const std::vector<int>& rows,
                           const Eigen::VectorXd& xb, const Eigen::MatrixXd& prec_u,
                           Eigen::MatrixXd& neg_hess, int group_index) {
  const int q = static_cast<int>(L.Z.cols());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd g = -prec_u * u;
    Eigen::MatrixXd H = -prec_u;
    for (int row : rows) {
      double eta = xb(row) + L.Z.row(row).head(q).dot(u);
      double mu, w;
      mean_weight(L.family, eta, mu, w);
      Eigen::VectorXd z = L.Z.row(row).head(q).transpose();
      g += (L.y(row) - mu) * z;
      H -= w * z * z.transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(-H);
    if (llt.info() != Eigen::Success) throw InnerModeFailure(group_index);
    Eigen::VectorXd step = llt.solve(g);
    // damp oversized Newton steps
    double norm = step.norm();
    if (norm > 5.0) step *= 5.0 / norm;
    u += step;
    if (!u.allFinite()) throw InnerModeFailure(group_index);
    if (step.norm() < 1e-10) {
      neg_hess = -H;
      return u;
    }
  }
  throw InnerModeFailure(group_index);
}

// marginal log-likelihood for one group by adaptive Gauss-Hermite quadrature
double group_marginal(const GlmmLayout& L, const std::vector<int>& rows,
                      const Eigen::VectorXd& xb, const Eigen::MatrixXd& prec_u,
                      double logdet_sigma_u, int group_index, Eigen::VectorXd* mode_out = nullptr) {
  const int q = static_cast<int>(L.Z.cols());
  Eigen::MatrixXd neg_hess;
  Eigen::VectorXd u_hat = group_mode(L, rows, xb, prec_u, neg_hess, group_index);
  if (mode_out) *mode_out = u_hat;

  Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
  if (llt.info() != Eigen::Success) throw InnerModeFailure(group_index);
  // scale matrix S with S S' = neg_hess^{-1}
  Eigen::MatrixXd S =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(q, q)).transpose();
  double logdet_S = 0.0;
  for (int i = 0; i < q; ++i) logdet_S += std::log(S(i, i));

  const int m = L.n_agq;
  const int total = (q == 1) ? m : m * m;
  Eigen::VectorXd terms(total);
  for (int k = 0; k < total; ++k) {
    Eigen::VectorXd t(q);
    double logw, t2;
    if (q == 1) {
      t(0) = L.gh_nodes(k);
      logw = std::log(L.gh_weights(k));
      t2 = t(0) * t(0);
    } else {
      int k1 = k / m, k2 = k % m;
      t(0) = L.gh_nodes(k1);
      t(1) = L.gh_nodes(k2);
      logw = std::log(L.gh_weights(k1)) + std::log(L.gh_weights(k2));
      t2 = t.squaredNorm();
    }
    Eigen::VectorXd u = u_hat + std::sqrt(2.0) * (S * t);
    terms(k) = logw + t2 + group_joint(L, rows, xb, prec_u, logdet_sigma_u, u);
  }
  return 0.5 * q * std::log(2.0) + logdet_S + log_sum_exp(terms);
}

// Covariance of the random effects from the natural-scale parameters
// (sigma2_0 [, sigma2_1, rho]).
bool make_sigma_u(const Eigen::VectorXd& vp, int q, Eigen::MatrixXd& prec, double& logdet) {
  Eigen::MatrixXd sigma(q, q);
  if (vp(0) <= 0) return false;
  sigma(0, 0) = vp(0);
  if (q == 2) {
    if (vp(1) <= 0 || std::abs(vp(2)) >= 1) return false;
    sigma(1, 1) = vp(1);
    sigma(0, 1) = sigma(1, 0) = vp(2) * std::sqrt(vp(0) * vp(1));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return false;
  logdet = 0.0;
  for (int i = 0; i < q; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  prec = llt.solve(Eigen::MatrixXd::Identity(q, q));
  return true;
}

double glmm_marginal(const GlmmLayout& L, const Eigen::VectorXd& beta, const Eigen::VectorXd& vp) {
  const int q = static_cast<int>(L.Z.cols());
  Eigen::MatrixXd prec;
  double logdet;
  if (!make_sigma_u(vp, q, prec, logdet)) return kNegInf;
  Eigen::VectorXd xb = L.X * beta;
  double total = 0.0;
  for (size_t g = 0; g < L.groups.size(); ++g) {
    double lg = group_marginal(L, L.groups[g], xb, prec, logdet, static_cast<int>(g));
    if (!std::isfinite(lg)) return kNegInf;
    total += lg;
  }
  return total;
}

}  // namespace

GlmmFit fit_glmm(const GroupedDataset& data, const ModelSpec& spec, Family family, int n_agq) {
  if (family != Family::GLMMBinomial && family != Family::GLMMPoisson)
    throw DomainError("fit_glmm supports binomial and Poisson families");
  GlmmLayout L = glmm_layout(data, spec, family, n_agq);
  const int pf = static_cast<int>(L.X.cols());
  const int q = static_cast<int>(L.Z.cols());
  const int nvp = (q == 1) ? 1 : 3;  // sigma2_0 [, sigma2_1, rho]

  // start at an intercept matching the response mean, unit variances
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(pf + nvp);
  double ybar = L.y.mean();
  if (family == Family::GLMMBinomial) {
    double pbar = std::min(std::max(ybar, 0.05), 0.95);
    if (spec.intercept_fixed) x0(0) = std::log(pbar / (1.0 - pbar));
  } else {
    if (spec.intercept_fixed) x0(0) = std::log(std::max(ybar, 0.1));
  }
  // variance parameters optimized as log sigma2 (and atanh rho)
  x0.segment(pf, nvp).setZero();

  auto unpack_vp = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd vp(nvp);
    vp(0) = std::max(std::exp(x(pf)), kVarianceLowerBound);
    if (nvp == 3) {
      vp(1) = std::max(std::exp(x(pf + 1)), kVarianceLowerBound);
      vp(2) = std::tanh(x(pf + 2));
    }
    return vp;
  };

  auto objective = [&](const Eigen::VectorXd& x) {
    try {
      double ll = glmm_marginal(L, x.head(pf), unpack_vp(x));
      return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max() / 4;
    } catch (const InnerModeFailure&) {
      return std::numeric_limits<double>::max() / 4;
    }
  };

  SimplexOptions opts;
  auto res = minimize_simplex(objective, x0, opts);

  GlmmFit fit;
  fit.beta_hat = res.x.head(pf);
  Eigen::VectorXd vp = unpack_vp(res.x);
  fit.var_components = vp.head(q);
  fit.rho = (nvp == 3) ? vp(2) : 0.0;
  fit.quadrature_points = n_agq;
  fit.iterations = res.iterations;
  fit.converged = res.converged;

  if (family == Family::GLMMBinomial) {
    // separation check at the conditional modes
    Eigen::MatrixXd prec;
    double logdet;
    make_sigma_u(vp, q, prec, logdet);
    Eigen::VectorXd xb = L.X * fit.beta_hat;
    bool all_extreme = true;
    for (size_t g = 0; g < L.groups.size() && all_extreme; ++g) {
      Eigen::MatrixXd nh;
      Eigen::VectorXd u_hat;
      try {
        u_hat = group_mode(L, L.groups[g], xb, prec, nh, static_cast<int>(g));
      } catch (const InnerModeFailure&) {
        all_extreme = false;
        break;
      }
      for (int row : L.groups[g]) {
        double eta = xb(row) + L.Z.row(row).head(q).dot(u_hat);
        double mu = 1.0 / (1.0 + std::exp(-eta));
        if (mu > 1e-8 && mu < 1.0 - 1e-8) {
          all_extreme = false;
          break;
        }
      }
    }
    if (all_extreme) throw CompleteSeparation("fitted probabilities are all within 1e-8 of 0 or 1");
  }

  fit.loglik = glmm_marginal(L, fit.beta_hat, vp);
  if (!res.converged) throw NonConvergence(res.iterations, fit.loglik);

  fit.theta_hat.resize(pf + nvp);
  fit.theta_hat.head(pf) = fit.beta_hat;
  fit.theta_hat.segment(pf, nvp) = vp;
  fit.p_params = pf + nvp;
  fit.n_eff = data.n();
  fit.family = family;
  return fit;
}

LoglikFn glmm_loglik(const GroupedDataset& data, const ModelSpec& spec, Family family,
                     int n_agq) {
  auto L = std::make_shared<GlmmLayout>(glmm_layout(data, spec, family, n_agq));
  const int pf = static_cast<int>(L->X.cols());
  const int nvp = (L->Z.cols() == 1) ? 1 : 3;
  return [L, pf, nvp](const Eigen::VectorXd& theta) {
    Eigen::VectorXd vp = theta.segment(pf, nvp);
    try {
      return glmm_marginal(*L, theta.head(pf), vp);
    } catch (const InnerModeFailure&) {
      return kNegInf;
    }
  };
}

}  // namespace curvebic
