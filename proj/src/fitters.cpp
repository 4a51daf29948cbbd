#include "curvebic/fitters.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "curvebic/core.hpp"
#include "curvebic/simplex.hpp"

namespace curvebic {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

LinearFit fit_linear(const Dataset& data, const ModelSpec& spec) {
  const Eigen::MatrixXd X = build_design(data, spec.fixed_columns, spec.intercept_fixed);
  const int n = data.n();
  const int p = static_cast<int>(X.cols());
  if (n <= p) throw RankDeficientDesign("n <= number of design columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw RankDeficientDesign("design columns are linearly dependent");

  LinearFit fit;
  fit.beta_hat = qr.solve(data.y);
  Eigen::VectorXd resid = data.y - X * fit.beta_hat;
  double rss = resid.squaredNorm();
  fit.sigma2_hat = rss / n;
  if (fit.sigma2_hat < 1e-12) throw DegenerateFit("residual variance is numerically zero");

  fit.loglik = -0.5 * n * (kLog2Pi + std::log(fit.sigma2_hat) + 1.0);
  fit.theta_hat.resize(p + 1);
  fit.theta_hat.head(p) = fit.beta_hat;
  fit.theta_hat(p) = fit.sigma2_hat;
  fit.p_params = p + 1;
  fit.n_eff = n;
  fit.converged = true;
  fit.iterations = 0;
  fit.family = Family::Linear;
  return fit;
}

LoglikFn linear_loglik(const Dataset& data, const ModelSpec& spec) {
  Eigen::MatrixXd X = build_design(data, spec.fixed_columns, spec.intercept_fixed);
  Eigen::VectorXd y = data.y;
  return [X, y](const Eigen::VectorXd& theta) {
    const int p = static_cast<int>(X.cols());
    double sigma2 = theta(p);
    if (sigma2 <= 0) return kNegInf;
    double rss = (y - X * theta.head(p)).squaredNorm();
    double n = static_cast<double>(y.size());
    return -0.5 * n * (kLog2Pi + std::log(sigma2)) - rss / (2.0 * sigma2);
  };
}

HierarchicalFit fit_hierarchical_normal(const GroupedDataset& data) {
  const int p = data.p_groups();
  const int r = static_cast<int>(data.group_rows[0].size());
  for (const auto& rows : data.group_rows)
    if (static_cast<int>(rows.size()) != r) throw UnbalancedGroups("group sizes differ");

  HierarchicalFit fit;
  fit.mu_hat.resize(p);
  double ss = 0.0;
  for (int i = 0; i < p; ++i) {
    double m = 0.0;
    for (int row : data.group_rows[i]) m += data.base.y(row);
    m /= r;
    fit.mu_hat(i) = m;
    for (int row : data.group_rows[i]) ss += (data.base.y(row) - m) * (data.base.y(row) - m);
  }
  fit.sigma2_hat = ss / (static_cast<double>(p) * r);
  if (fit.sigma2_hat < 1e-12) throw DegenerateFit("within-group variance is numerically zero");

  double pr = static_cast<double>(p) * r;
  fit.loglik = -0.5 * pr * (kLog2Pi + std::log(fit.sigma2_hat) + 1.0);
  fit.r_per_group = r;
  fit.theta_hat.resize(p + 1);
  fit.theta_hat.head(p) = fit.mu_hat;
  fit.theta_hat(p) = fit.sigma2_hat;
  fit.p_params = p + 1;
  fit.n_eff = data.n();
  fit.converged = true;
  fit.family = Family::HierarchicalNormal;
  return fit;
}

LoglikFn hierarchical_loglik(const GroupedDataset& data) {
  auto groups = data.group_rows;
  Eigen::VectorXd y = data.base.y;
  return [groups, y](const Eigen::VectorXd& theta) {
    const int p = static_cast<int>(groups.size());
    double sigma2 = theta(p);
    if (sigma2 <= 0) return kNegInf;
    double ss = 0.0;
    double n = 0.0;
    for (int i = 0; i < p; ++i) {
      for (int row : groups[i]) ss += (y(row) - theta(i)) * (y(row) - theta(i));
      n += static_cast<double>(groups[i].size());
    }
    return -0.5 * n * (kLog2Pi + std::log(sigma2)) - ss / (2.0 * sigma2);
  };
}

namespace {

struct MixedLayout {
  Eigen::MatrixXd X;                      // n x pf fixed design
  Eigen::MatrixXd Zall;                   // n x q random design
  std::vector<std::vector<int>> groups;   // row indices per group
  Eigen::VectorXd y;
};

MixedLayout mixed_layout(const GroupedDataset& data, const ModelSpec& spec) {
  MixedLayout L;
  L.X = build_design(data.base, spec.fixed_columns, spec.intercept_fixed);
  const int n = data.n();
  const int q = static_cast<int>(spec.random_columns.size()) + (spec.intercept_random ? 1 : 0);
  L.Zall.resize(n, q);
  int j = 0;
  if (spec.intercept_random) L.Zall.col(j++).setOnes();
  for (const auto& name : spec.random_columns) L.Zall.col(j++) = data.column(name);
  L.groups = data.group_rows;
  L.y = data.base.y;
  return L;
}

// Marginal Gaussian log-likelihood with per-group V = Z D Z' + s2 I.
// When beta == nullptr the residual uses *beta_out from GLS profiling.
double marginal_loglik(const MixedLayout& L, const Eigen::VectorXd& re_var, double sigma2_eps,
                       const Eigen::VectorXd* beta, Eigen::VectorXd* beta_out) {
  const int pf = static_cast<int>(L.X.cols());
  const int q = static_cast<int>(L.Zall.cols());
  Eigen::MatrixXd D = re_var.asDiagonal();

  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  llts.reserve(L.groups.size());
  double logdet_sum = 0.0;
  for (const auto& rows : L.groups) {
    const int ni = static_cast<int>(rows.size());
    Eigen::MatrixXd Zi(ni, q);
    for (int a = 0; a < ni; ++a) Zi.row(a) = L.Zall.row(rows[a]);
    Eigen::MatrixXd V = Zi * D * Zi.transpose();
    V.diagonal().array() += sigma2_eps;
    Eigen::LLT<Eigen::MatrixXd> llt(V);
    if (llt.info() != Eigen::Success)
      throw SingularMarginalCovariance("marginal covariance factorization failed");
    for (int a = 0; a < ni; ++a) logdet_sum += 2.0 * std::log(llt.matrixL()(a, a));
    llts.push_back(std::move(llt));
  }

  Eigen::VectorXd b;
  if (beta) {
    b = *beta;
  } else {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(pf, pf);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(pf);
    for (size_t g = 0; g < L.groups.size(); ++g) {
      const auto& rows = L.groups[g];
      const int ni = static_cast<int>(rows.size());
      Eigen::MatrixXd Xi(ni, pf);
      Eigen::VectorXd yi(ni);
      for (int a = 0; a < ni; ++a) {
        Xi.row(a) = L.X.row(rows[a]);
        yi(a) = L.y(rows[a]);
      }
      Eigen::MatrixXd VinvX = llts[g].solve(Xi);
      A += Xi.transpose() * VinvX;
      c += VinvX.transpose() * yi;
    }
    b = A.ldlt().solve(c);
    if (beta_out) *beta_out = b;
  }

  double quad = 0.0;
  double n_total = 0.0;
  for (size_t g = 0; g < L.groups.size(); ++g) {
    const auto& rows = L.groups[g];
    const int ni = static_cast<int>(rows.size());
    Eigen::VectorXd ri(ni);
    for (int a = 0; a < ni; ++a) ri(a) = L.y(rows[a]) - L.X.row(rows[a]).dot(b);
    quad += ri.dot(llts[g].solve(ri));
    n_total += ni;
  }
  return -0.5 * (n_total * kLog2Pi + logdet_sum + quad);
}

}  // namespace

double lmm_profile_loglik(const GroupedDataset& data, const ModelSpec& spec,
                          const Eigen::VectorXd& re_variances, double sigma2_eps,
                          Eigen::VectorXd* beta_out) {
  MixedLayout L = mixed_layout(data, spec);
  return marginal_loglik(L, re_variances, sigma2_eps, nullptr, beta_out);
}

MixedFit fit_lmm(const GroupedDataset& data, const ModelSpec& spec) {
  if (data.p_groups() < 2) throw DomainError("fit_lmm requires at least 2 groups");
  MixedLayout L = mixed_layout(data, spec);
  const int q = static_cast<int>(L.Zall.cols());
  const int pf = static_cast<int>(L.X.cols());

  // starting values from the OLS residual variance, split evenly
  double var0;
  {
    Eigen::VectorXd b = (L.X.transpose() * L.X).ldlt().solve(L.X.transpose() * L.y);
    var0 = (L.y - L.X * b).squaredNorm() / L.y.size();
    if (var0 < 1e-8) var0 = 1e-8;
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(q + 1, std::log(var0 / (q + 1)));

  auto objective = [&](const Eigen::VectorXd& lv) {
    Eigen::VectorXd re_var(q);
    for (int i = 0; i < q; ++i) re_var(i) = std::max(std::exp(lv(i)), kVarianceLowerBound);
    double s2 = std::max(std::exp(lv(q)), kVarianceLowerBound);
    try {
      return -marginal_loglik(L, re_var, s2, nullptr, nullptr);
    } catch (const SingularMarginalCovariance&) {
      return std::numeric_limits<double>::max() / 4;
    }
  };

  // restart with a wide fresh simplex; log-variance coordinates pinned far
  // below the bound leave the first pass stalled on a flat region, so pull
  // them back to a probeable level before each restart
  SimplexOptions opts;
  auto res = minimize_simplex(objective, x0, opts);
  SimplexOptions wide;
  wide.edge = 2.0;
  for (int restart = 0; restart < 3; ++restart) {
    Eigen::VectorXd xr = res.x.cwiseMax(std::log(1e-8));
    auto again = minimize_simplex(objective, xr, wide);
    bool improved = again.fmin < res.fmin - 1e-8 * (1.0 + std::abs(res.fmin));
    if (again.fmin < res.fmin) res = again;
    if (!improved) break;
  }

  MixedFit fit;
  fit.var_components.resize(q);
  for (int i = 0; i < q; ++i)
    fit.var_components(i) = std::max(std::exp(res.x(i)), kVarianceLowerBound);
  fit.sigma2_eps = std::max(std::exp(res.x(q)), kVarianceLowerBound);

  // a variance at the bound is a valid boundary MLE unless the likelihood is
  // still climbing as the variance shrinks (unbounded, e.g. an exact fit)
  for (int i = 0; i <= q; ++i) {
    if (std::exp(res.x(i)) > kVarianceLowerBound) continue;
    Eigen::VectorXd lv = res.x;
    lv(i) = std::log(10.0 * kVarianceLowerBound);
    if (objective(lv) - res.fmin > 0.5)
      throw DegenerateFit("variance pinned at the lower bound with active gradient");
  }

  Eigen::VectorXd beta;
  fit.loglik = marginal_loglik(L, fit.var_components, fit.sigma2_eps, nullptr, &beta);
  fit.beta_hat = beta;
  fit.iterations = res.iterations;
  fit.converged = res.converged;
  if (!res.converged) throw NonConvergence(res.iterations, fit.loglik);

  fit.theta_hat.resize(pf + q + 1);
  fit.theta_hat.head(pf) = beta;
  fit.theta_hat.segment(pf, q) = fit.var_components;
  fit.theta_hat(pf + q) = fit.sigma2_eps;
  fit.p_params = pf + q + 1;
  fit.n_eff = data.n();
  fit.family = Family::LMM;
  return fit;
}

LoglikFn lmm_loglik(const GroupedDataset& data, const ModelSpec& spec) {
  auto L = std::make_shared<MixedLayout>(mixed_layout(data, spec));
  const int pf = static_cast<int>(L->X.cols());
  const int q = static_cast<int>(L->Zall.cols());
  return [L, pf, q](const Eigen::VectorXd& theta) {
    Eigen::VectorXd re_var = theta.segment(pf, q);
    double s2 = theta(pf + q);
    if (s2 <= 0 || (re_var.array() < 0).any()) return kNegInf;
    Eigen::VectorXd beta = theta.head(pf);
    try {
      return marginal_loglik(*L, re_var, s2, &beta, nullptr);
    } catch (const SingularMarginalCovariance&) {
      return kNegInf;
    }
  };
}

}  // namespace curvebic
