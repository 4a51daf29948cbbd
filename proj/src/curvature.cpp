#include "curvebic/curvature.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace curvebic {

namespace {

double checked_eval(const std::function<double(const Eigen::VectorXd&)>& f,
                    const Eigen::VectorXd& x) {
  double v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream ss;
    ss << "log-likelihood not finite at stencil point [" << x.transpose() << "]";
    throw EvaluationFailure(ss.str());
  }
  return v;
}

}  // namespace

Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd&)>& loglik,
                                  const Eigen::VectorXd& theta_hat, const HessianConfig& cfg) {
  const int p = static_cast<int>(theta_hat.size());
  const double base =
      cfg.step_scale * std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  Eigen::VectorXd h(p);
  for (int j = 0; j < p; ++j) h(j) = base * std::max(1.0, std::abs(theta_hat(j)));

  const double f0 = checked_eval(loglik, theta_hat);
  Eigen::MatrixXd H(p, p);

  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd xp = theta_hat, xm = theta_hat;
    xp(j) += h(j);
    xm(j) -= h(j);
    H(j, j) = (checked_eval(loglik, xp) - 2.0 * f0 + checked_eval(loglik, xm)) / (h(j) * h(j));
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      Eigen::VectorXd xpp = theta_hat, xpm = theta_hat, xmp = theta_hat, xmm = theta_hat;
      xpp(i) += h(i); xpp(j) += h(j);
      xpm(i) += h(i); xpm(j) -= h(j);
      xmp(i) -= h(i); xmp(j) += h(j);
      xmm(i) -= h(i); xmm(j) -= h(j);
      double v = (checked_eval(loglik, xpp) - checked_eval(loglik, xpm) -
                  checked_eval(loglik, xmp) + checked_eval(loglik, xmm)) /
                 (4.0 * h(i) * h(j));
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  if (cfg.symmetrize) H = ((H + H.transpose()) / 2.0).eval();
  return H;
}

CurvatureResult log_det_information(const Eigen::MatrixXd& hessian, const HessianConfig& cfg) {
  if (hessian.rows() != hessian.cols()) throw DomainError("hessian must be square");
  if (cfg.regularization_ridge < 0) throw DomainError("ridge must be nonnegative");

  CurvatureResult out;
  Eigen::MatrixXd J = -hessian;
  if (cfg.symmetrize) J = ((J + J.transpose()) / 2.0).eval();
  J.diagonal().array() += cfg.regularization_ridge;
  out.information = J;
  out.regularized = cfg.regularization_ridge > 0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();

  Eigen::LLT<Eigen::MatrixXd> llt(J);
  if (llt.info() != Eigen::Success || out.min_eigenvalue <= 0)
    throw NotPositiveDefinite(out.min_eigenvalue);

  double logdet = 0.0;
  for (int i = 0; i < J.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  out.log_det = logdet;
  return out;
}

double hierarchical_logdet_closed_form(int p, int r, double sigma2_hat) {
  if (p < 1 || r < 1 || sigma2_hat <= 0)
    throw DomainError("hierarchical_logdet_closed_form requires p >= 1, r >= 1, sigma2 > 0");
  return (p + 1) * std::log(static_cast<double>(r)) + std::log(static_cast<double>(p)) -
         std::log(2.0) - (p + 2) * std::log(sigma2_hat);
}

}  // namespace curvebic
